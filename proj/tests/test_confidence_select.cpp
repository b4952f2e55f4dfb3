#include <cmath>

#include "doctest.h"
#include "lsf/confidence_select.hpp"
#include "lsf/rng.hpp"
#include "lsf/synth_scenes.hpp"

using namespace lsf;

namespace {

MatchedObject matched(double iou, double conf) {
  MatchedObject m;
  m.prediction.confidence = conf;
  m.iou = iou;
  return m;
}

// Independent step-by-step simulation of the smoothed-proportion rule.
struct ReplayOracle {
  std::vector<long> counts;

  explicit ReplayOracle(std::size_t n) : counts(n, 0) {}

  std::size_t step(const std::vector<double>& raw_scores) {
    long total = 0;
    for (long c : counts) total += c;
    const double denom = static_cast<double>(total) + static_cast<double>(counts.size());
    std::size_t pick = 0;
    double best = raw_scores[0] * (static_cast<double>(counts[0]) + 1.0) / denom;
    for (std::size_t i = 1; i < raw_scores.size(); ++i) {
      const double w = raw_scores[i] * (static_cast<double>(counts[i]) + 1.0) / denom;
      if (w < best || (w == best && raw_scores[i] < raw_scores[pick])) {
        best = w;
        pick = i;
      }
    }
    counts[pick] += 1;
    return pick;
  }
};

std::vector<FrameConfidence> as_scores(const std::vector<double>& raw,
                                       const std::vector<std::string>& names) {
  std::vector<FrameConfidence> out;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    FrameConfidence f;
    f.variant_name = names[i];
    f.score = raw[i];
    f.had_valid_matches = raw[i] > 0.0;
    out.push_back(f);
  }
  return out;
}

const std::vector<std::string> kNames{"a", "b", "c", "d"};

}  // namespace

TEST_SUITE("confidence_select") {

TEST_CASE("frame_confidence single qualifying match") {
  const FrameConfidence f = frame_confidence({matched(0.8, 0.9)}, 0.5);
  CHECK(f.score == 0.9);
  CHECK(f.matched_count == 1);
  CHECK(f.had_valid_matches);
}

TEST_CASE("frame_confidence filters below-threshold matches") {
  const FrameConfidence f = frame_confidence({matched(0.8, 0.9), matched(0.4, 0.3)}, 0.5);
  CHECK(f.score == 0.9);
  CHECK(f.matched_count == 1);
}

TEST_CASE("frame_confidence zero convention") {
  const FrameConfidence f = frame_confidence({}, 0.5);
  CHECK(f.score == 0.0);
  CHECK_FALSE(f.had_valid_matches);
}

TEST_CASE("frame_confidence equals direct summation") {
  SeededRng rng(8);
  std::vector<MatchedObject> ms;
  double sum = 0.0;
  int n = 0;
  for (int i = 0; i < 57; ++i) {
    const double iou = rng.uniform(0.0, 1.0);
    const double conf = rng.uniform(0.0, 1.0);
    ms.push_back(matched(iou, conf));
    if (iou > 0.5) {
      sum += conf;
      ++n;
    }
  }
  const FrameConfidence f = frame_confidence(ms, 0.5);
  CHECK(f.matched_count == n);
  CHECK(f.score == sum / n);  // identical arithmetic, exact in doubles
}

TEST_CASE("weighted_select documented examples") {
  SUBCASE("full tie chain picks index 0") {
    SelectionState state({"a", "b", "c"}, 0.5);
    CHECK(weighted_select(as_scores({0.4, 0.4, 0.4}, {"a", "b", "c"}), state) == 0);
    CHECK(state.count_of("a") == 1);
  }
  SUBCASE("equal counts reduce to argmin of raw scores") {
    SelectionState state({"a", "b"}, 0.5);
    for (int i = 0; i < 5; ++i) {
      state.increment("a");
      state.increment("b");
    }
    CHECK(weighted_select(as_scores({0.9, 0.1}, {"a", "b"}), state) == 1);
  }
  SUBCASE("forced arithmetic overrides the raw ordering") {
    SelectionState state({"a", "b"}, 0.5);
    for (int i = 0; i < 10; ++i) state.increment("b");
    // weighted: 0.2 * 1/12 vs 0.8 * 11/12
    CHECK(weighted_select(as_scores({0.2, 0.8}, {"a", "b"}), state) == 0);
  }
  SUBCASE("unknown variant is rejected") {
    SelectionState state({"a"}, 0.5);
    CHECK_THROWS_AS(weighted_select(as_scores({0.1}, {"zzz"}), state), Error);
  }
}

TEST_CASE("constant equal scores balance the counts") {
  SelectionState state(kNames, 0.5);
  for (int round = 0; round < 200; ++round) {
    weighted_select(as_scores({0.5, 0.5, 0.5, 0.5}, kNames), state);
  }
  long lo = 1L << 40, hi = 0;
  for (long c : state.counts()) {
    lo = std::min(lo, c);
    hi = std::max(hi, c);
  }
  CHECK(hi - lo <= 1);
  CHECK(state.total() == 200);
}

TEST_CASE("stochastic rounds reproduce the replay oracle exactly") {
  SelectionState state(kNames, 0.5);
  ReplayOracle oracle(4);
  SeededRng rng(99);
  for (int round = 0; round < 200; ++round) {
    std::vector<double> raw(4);
    for (double& s : raw) s = rng.uniform() < 0.15 ? 0.0 : rng.uniform(0.0, 1.0);
    const std::size_t got = weighted_select(as_scores(raw, kNames), state);
    const std::size_t want = oracle.step(raw);
    CHECK(got == want);
  }
  for (std::size_t i = 0; i < 4; ++i) CHECK(state.counts()[i] == oracle.counts[i]);
}

TEST_CASE("zero-scored variant wins whenever its proportion is minimal") {
  SelectionState state(kNames, 0.5);
  SeededRng rng(123);
  std::size_t zero_index = 2;
  for (int round = 0; round < 100; ++round) {
    std::vector<double> raw{rng.uniform(0.1, 1.0), rng.uniform(0.1, 1.0), 0.0,
                            rng.uniform(0.1, 1.0)};
    const std::size_t got = weighted_select(as_scores(raw, kNames), state);
    // A zero raw score gives weighted 0, the global minimum; it can lose
    // only to another zero-scored variant.
    CHECK(raw[got] == 0.0);
    CHECK(got == zero_index);
  }
}

TEST_CASE("selection is invariant to a common positive scale") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SeededRng rng(mix_seed(1000, seed));
    std::vector<double> raw(4);
    for (double& s : raw) s = rng.uniform(0.0, 1.0);
    SelectionState a(kNames, 0.5);
    SelectionState b(kNames, 0.5);
    for (int i = 0; i < 4; ++i) {
      const int reps = rng.uniform_int(0, 6);
      for (int r = 0; r < reps; ++r) {
        a.increment(kNames[i]);
        b.increment(kNames[i]);
      }
    }
    std::vector<double> scaled = raw;
    const double c = rng.uniform(0.25, 4.0);
    for (double& s : scaled) s *= c;
    CHECK(weighted_select(as_scores(raw, kNames), a) ==
          weighted_select(as_scores(scaled, kNames), b));
  }
}

TEST_CASE("select_augmentation composes the pipeline") {
  SceneSpec spec;
  spec.seed = 7;
  spec.beams = 8;
  spec.azimuth_step_deg = 2.0;
  spec.wall_height = 8.0;
  spec.object_count_min = 2;
  spec.object_count_max = 3;
  const Scene scene = generate_scene(spec);
  const std::vector<BeamVariantSpec> specs{{"8", 1, 1}, {"4", 2, 1}, {"4*", 2, 2}};

  SUBCASE("blind detector ties to index 0 and updates the count") {
    SelectionState state({"8", "4", "4*"}, 0.5);
    const DetectorFn blind = [](const PointCloud&) { return std::vector<Detection>{}; };
    const SelectionResult res =
        select_augmentation(scene.cloud, scene.gt_boxes, blind, specs, state, 8);
    CHECK(res.variant_index == 0);
    CHECK(res.record.score == 0.0);
    CHECK(state.count_of("8") == 1);
    CHECK(state.total() == 1);
  }

  SUBCASE("the one blind variant is chosen") {
    SelectionState state({"8", "4", "4*"}, 0.5);
    const std::size_t full_size = scene.cloud.size();
    const std::vector<Box3D> gts = scene.gt_boxes;
    // Confident and exact everywhere except on the half-beam variant.
    const DetectorFn detector = [&gts, full_size](const PointCloud& cloud) {
      std::vector<Detection> preds;
      if (cloud.size() == full_size / 2) return preds;  // blind on "4"
      for (const Box3D& gt : gts) preds.push_back({gt, 1.0});
      return preds;
    };
    const SelectionResult res =
        select_augmentation(scene.cloud, scene.gt_boxes, detector, specs, state, 8);
    CHECK(res.record.variant_name == "4");
    CHECK(state.count_of("4") == 1);
  }
}

}  // TEST_SUITE
