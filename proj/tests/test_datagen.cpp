#include <gtest/gtest.h>

#include <cmath>

#include "fantope/datagen.hpp"

using namespace fantope;

namespace {

ModelConfig config(ModelKind model, double p, int m = 200, std::uint64_t seed = 1) {
  ModelConfig c;
  c.n = 15;
  c.k = 3;
  c.m = m;
  c.p = p;
  c.model = model;
  c.seed = seed;
  return c;
}

}  // namespace

TEST(RandomProjection, IdempotentWithTraceK) {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const ProjectionMatrix p = random_projection(10, 1 + trial % 9, rng);
    const Matrix m = p.matrix().matrix();
    EXPECT_LE((m * m - m).norm(), 1e-10);
    EXPECT_NEAR(m.trace(), 1 + trial % 9, 1e-10);
  }
}

TEST(RandomProjection, FullRankIsIdentity) {
  Rng rng(2);
  EXPECT_LE((random_projection(5, 5, rng).matrix().matrix() - Matrix::Identity(5, 5)).norm(),
            1e-12);
}

TEST(RandomProjection, HaarMeanIsScaledIdentity) {
  // E[P] = (k/n) I. Entry variances are estimated from the same draws.
  const Index n = 6;
  const int k = 2;
  const int draws = 10000;
  Rng rng(3);
  Matrix sum = Matrix::Zero(n, n);
  Matrix sum_sq = Matrix::Zero(n, n);
  for (int i = 0; i < draws; ++i) {
    const Matrix p = random_projection(n, k, rng).matrix().matrix();
    sum += p;
    sum_sq += p.cwiseProduct(p);
  }
  const Matrix mean = sum / draws;
  const Matrix var = sum_sq / draws - mean.cwiseProduct(mean);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      const double expected = i == j ? static_cast<double>(k) / n : 0.0;
      const double se = std::sqrt(var(i, j) / draws);
      EXPECT_LE(std::abs(mean(i, j) - expected), 5.0 * se) << i << "," << j;
    }
  }
}

TEST(ModelConfig, Validation) {
  ModelConfig c;
  EXPECT_NO_THROW(c.validate());
  c.p = 0.6;
  try {
    c.validate();
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("p must be in (0,0.5]"), std::string::npos);
  }
  c.p = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = ModelConfig{};
  c.k = c.n;
  EXPECT_THROW(c.validate(), ConfigError);
  c = ModelConfig{};
  c.m = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_THROW(parse_model_kind("gaussian"), ConfigError);
  EXPECT_EQ(parse_model_kind("corrupted"), ModelKind::Corrupted);
}

TEST(GenSpiked, UnitNormSamples) {
  const Instance inst = gen_spiked(config(ModelKind::Spiked, 0.3));
  for (Index i = 0; i < inst.data->m(); ++i) {
    EXPECT_NEAR(inst.data->sample(i).norm(), 1.0, 1e-12);
  }
  const Matrix p = inst.truth.matrix().matrix();
  EXPECT_LE((p * p - p).norm(), 1e-10);
}

TEST(GenSpiked, NoCorruptionLiesInRange) {
  const Instance inst = gen_spiked(config(ModelKind::Spiked, 0.0));
  const Matrix p = inst.truth.matrix().matrix();
  for (Index i = 0; i < inst.data->m(); ++i) {
    const Vector q = inst.data->sample(i);
    EXPECT_LE((q - p * q).norm(), 1e-12);
  }
}

TEST(GenSpiked, CorruptionFractionConcentrates) {
  const double p = 0.2;
  const int m = 10000;
  const Instance inst = gen_spiked(config(ModelKind::Spiked, p, m, 4));
  const Matrix proj = inst.truth.matrix().matrix();
  int outliers = 0;
  for (Index i = 0; i < m; ++i) {
    const Vector q = inst.data->sample(i);
    if ((q - proj * q).norm() > 1e-9) ++outliers;
  }
  EXPECT_LE(std::abs(static_cast<double>(outliers) / m - p), 4.0 * std::sqrt(p * (1 - p) / m));
}

TEST(GenCorrupted, NoCorruptionLiesInRange) {
  const Instance inst = gen_corrupted(config(ModelKind::Corrupted, 0.0));
  const Matrix p = inst.truth.matrix().matrix();
  for (Index i = 0; i < inst.data->m(); ++i) {
    const Vector q = inst.data->sample(i);
    EXPECT_LE((q - p * q).norm(), 1e-12);
    EXPECT_NEAR(q.norm(), 1.0, 1e-12);
  }
}

TEST(GenCorrupted, OneEntryOverwrittenWithSign) {
  const ModelConfig c = config(ModelKind::Corrupted, 0.5, 300, 6);
  const Instance inst = gen_corrupted(c);
  const ModelConfig clean_cfg = [&] {
    ModelConfig x = c;
    x.p = 0.0;
    return x;
  }();
  const Matrix frame = inst.truth.frame.basis();
  int hits = 0;
  for (Index i = 0; i < c.m; ++i) {
    bool corrupted = false;
    const Vector q = corrupted_sample(c, frame, i, &corrupted);
    EXPECT_EQ(q, inst.data->sample(i));
    const Vector clean = corrupted_sample(clean_cfg, frame, i);
    const Vector diff = q - clean;
    const Index changed = (diff.array() != 0.0).count();
    if (corrupted) {
      ++hits;
      EXPECT_LE(changed, 1);
      bool has_sign = false;
      for (Index j = 0; j < q.size(); ++j) {
        if (diff(j) != 0.0) EXPECT_EQ(std::abs(q(j)), 1.0);
        if (std::abs(q(j)) == 1.0) has_sign = true;
      }
      EXPECT_TRUE(has_sign);
    } else {
      EXPECT_EQ(changed, 0);
    }
  }
  EXPECT_GT(hits, 0);
}

TEST(GenCorrupted, CorruptionFractionConcentrates) {
  const double p = 0.1;
  const int m = 10000;
  const ModelConfig c = config(ModelKind::Corrupted, p, m, 8);
  const Instance inst = gen_corrupted(c);
  int hits = 0;
  for (Index i = 0; i < m; ++i) {
    bool corrupted = false;
    corrupted_sample(c, inst.truth.frame.basis(), i, &corrupted);
    hits += corrupted;
  }
  EXPECT_LE(std::abs(static_cast<double>(hits) / m - p), 4.0 * std::sqrt(p * (1 - p) / m));
}

TEST(Generate, SameSeedIsBitIdentical) {
  for (ModelKind model : {ModelKind::Spiked, ModelKind::Corrupted}) {
    const Instance a = generate(config(model, 0.2, 100, 42));
    const Instance b = generate(config(model, 0.2, 100, 42));
    EXPECT_EQ(a.data->points(), b.data->points());
    EXPECT_EQ(a.truth.frame.basis(), b.truth.frame.basis());
    const Instance c = generate(config(model, 0.2, 100, 43));
    EXPECT_NE(a.data->points(), c.data->points());
  }
}

TEST(Generate, PerSampleStreamsMatchBatch) {
  // Generating a prefix of the samples reproduces the same columns.
  const Instance full = gen_spiked(config(ModelKind::Spiked, 0.2, 50, 9));
  const Instance prefix = gen_spiked(config(ModelKind::Spiked, 0.2, 20, 9));
  EXPECT_EQ(full.data->points().leftCols(20), prefix.data->points());
}

TEST(Generate, DimensionsAndModelTag) {
  const Instance inst = generate(config(ModelKind::Corrupted, 0.1, 33));
  EXPECT_EQ(inst.data->n(), 15);
  EXPECT_EQ(inst.data->m(), 33);
  EXPECT_EQ(inst.truth.rank(), 3);
  EXPECT_EQ(inst.config.model, ModelKind::Corrupted);
  EXPECT_THROW(generate(config(ModelKind::Spiked, 1.5)), InputError);
}

TEST(RecoveryError, ZeroAtTruth) {
  const Instance inst = generate(config(ModelKind::Spiked, 0.1));
  EXPECT_EQ(recovery_error(inst.truth.matrix(), inst.truth), 0.0);
}
