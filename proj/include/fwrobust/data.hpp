#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "fwrobust/numerics.hpp"

namespace fwrobust {

/// Immutable after construction; shared freely across threads.
struct Dataset {
    std::vector<Vec> features;  // n examples, d coordinates each
    std::vector<int> labels;    // values in [0, class_count)
    int class_count = 0;
    std::string name;

    std::size_t size() const { return features.size(); }
    std::size_t dim() const { return features.empty() ? 0 : features.front().size(); }
};

enum class SynthKind { blobs, two_moons, circles };

SynthKind synth_kind_from_name(const std::string& name);
std::string synth_kind_name(SynthKind k);

/// Seeded synthetic datasets. Noise is the std-dev of additive Gaussian
/// jitter. Base geometry before jitter:
///   blobs      — class centers 3 apart (on a circle for d >= 2), C classes
///   two_moons  — interleaved half circles in [-1,2] x [-0.5,1], C=2
///   circles    — concentric radii 1.0 and 0.5, C=2
/// Labels are balanced: example i gets class i mod C (moons/circles split
/// n/2 up, n/2 down).
Dataset synth_dataset(SynthKind kind, std::size_t n, std::size_t d, int class_count,
                      double noise, SeededRng rng);

/// IDX (big-endian) image + label pair as used by the classic digit sets.
/// Pixels land in [0,1] (divided by 255), images flattened row-major.
/// max_n = 0 keeps everything.
Dataset load_idx(const std::string& images_path, const std::string& labels_path,
                 std::size_t max_n);

/// Headered numeric CSV; the named column carries integer labels, every
/// other column is a feature in header order.
Dataset load_csv_dataset(const std::string& path, const std::string& label_column);

/// Inverse of load_csv_dataset: feature columns under their names (f0.. when
/// unnamed), labels under `label`. Reals at 17 significant digits.
void save_csv_dataset(const Dataset& data, const std::string& path);

/// New dataset holding the given examples in the given order.
Dataset subset(const Dataset& data, const std::vector<std::size_t>& indices);

}  // namespace fwrobust
