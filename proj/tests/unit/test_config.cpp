#include <gtest/gtest.h>

#include <json.hpp>

#include "nmguard/config.hpp"
#include "nmguard/error.hpp"

using namespace nmguard;

TEST(Config, EveryKeyHasDefaultAndDoc) {
  const RunConfig defaults;
  const auto keys = config_keys();
  EXPECT_GT(keys.size(), 40u);
  for (const auto& k : keys) {
    EXPECT_FALSE(k.doc.empty()) << k.key;
    EXPECT_FALSE(k.type.empty()) << k.key;
    EXPECT_EQ(get_config_value(defaults, k.key), k.default_value) << k.key;
  }
}

TEST(Config, SetAndGetRoundTrip) {
  RunConfig cfg;
  apply_override(cfg, "synth.n_days=30");
  apply_override(cfg, "attack2.alpha=0.25");
  apply_override(cfg, "detector.forwarding=penultimate");
  apply_override(cfg, "detector.baselines=cnngru,mlp");
  EXPECT_EQ(cfg.synth.n_days, 30);
  EXPECT_EQ(cfg.attacks[1].alpha, 0.25);
  EXPECT_EQ(cfg.forwarding, Forwarding::Penultimate);
  EXPECT_EQ(cfg.baselines, (std::vector<Baseline>{Baseline::CnnGru, Baseline::Mlp}));
  EXPECT_EQ(get_config_value(cfg, "synth.n_days"), "30");
}

TEST(Config, UnknownKeysAndBadValuesAreRejected) {
  RunConfig cfg;
  EXPECT_THROW(apply_override(cfg, "synth.n_dayz=3"), UsageError);
  EXPECT_THROW(apply_override(cfg, "synth.n_days=three"), UsageError);
  EXPECT_THROW(apply_override(cfg, "no_equals_sign"), UsageError);
  EXPECT_THROW(config_from_json(R"({"synth": {"colour": 1}})"), UsageError);
  EXPECT_THROW(config_from_json(R"({"bogus": 1})"), UsageError);
  EXPECT_THROW(config_from_json("{not json"), UsageError);
}

TEST(Config, JsonRoundTripPreservesHash) {
  RunConfig cfg;
  apply_override(cfg, "seed=99");
  apply_override(cfg, "train.epochs.stage2=4");
  apply_override(cfg, "adasyn.enabled=false");
  const RunConfig back = config_from_json(config_to_json(cfg));
  EXPECT_EQ(config_hash(back), config_hash(cfg));
  EXPECT_EQ(back.seed, 99u);
  EXPECT_EQ(back.train.epochs[model_index("stage2")], 4);
  EXPECT_FALSE(back.train.adasyn);
}

TEST(Config, HashIgnoresThreadsAndRunRootOnly) {
  RunConfig a, b;
  apply_override(b, "runtime.threads=4");
  apply_override(b, "paths.run_root=/tmp/elsewhere");
  EXPECT_EQ(config_hash(a), config_hash(b));
  apply_override(b, "attack1.min_window_hours=5");
  EXPECT_NE(config_hash(a), config_hash(b));
  EXPECT_EQ(config_hash(a).size(), 16u);
}

TEST(Config, FinalizeDerivesDistinctSubSeeds) {
  RunConfig cfg;
  cfg.finalize();
  EXPECT_NE(cfg.synth.seed, cfg.split.seed);
  EXPECT_NE(cfg.split.seed, cfg.adasyn.seed);
  EXPECT_EQ(derive_seed(7, "train"), derive_seed(7, "train"));
  EXPECT_NE(derive_seed(7, "train"), derive_seed(8, "train"));
}

TEST(Config, ValidationCatchesOutOfRangeValues) {
  RunConfig cfg;
  apply_override(cfg, "split.train_fraction=1.5");
  EXPECT_THROW(cfg.finalize(), UsageError);
  RunConfig threads;
  apply_override(threads, "runtime.threads=0");
  EXPECT_THROW(threads.finalize(), UsageError);
}

TEST(Config, PerModelTrainingConfig) {
  RunConfig cfg;
  apply_override(cfg, "train.max_epochs=12");
  apply_override(cfg, "train.epochs.cnngru=3");
  EXPECT_EQ(train_config_for(cfg, "cnngru").max_epochs, 3);
  EXPECT_EQ(train_config_for(cfg, "stage1").max_epochs, 12);
  EXPECT_THROW(model_index("resnet"), UsageError);
}
