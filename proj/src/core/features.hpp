#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "core/image.hpp"

namespace uwe {

struct FeatureConfig {
    int n_features = 500;
    double fast_threshold = 0.08; // unit-interval scale (~20/255)
    int levels = 8;
    double scale_factor = 1.2;
    double match_ratio = 0.8;

    void validate() const;
};

struct Keypoint {
    double x = 0.0; // level-0 frame, sub-pixel
    double y = 0.0;
    int level = 0;
    double orientation = 0.0; // radians in [0, 2pi)
    double response = 0.0;
};

struct Descriptor256 {
    std::array<std::uint64_t, 4> words = {};

    void set_bit(int i) { words[i >> 6] |= std::uint64_t{1} << (i & 63); }
    bool bit(int i) const { return (words[i >> 6] >> (i & 63)) & 1; }
};

int hamming_distance(const Descriptor256& a, const Descriptor256& b);

/// Multi-scale FAST-9 corners with centroid orientations, strongest
/// n_features kept across all pyramid levels.
std::vector<Keypoint> detect(const ImageBuffer& gray, const FeatureConfig& config = {});

struct DescribeResult {
    std::vector<Descriptor256> descriptors;
    std::vector<std::size_t> keypoint_indices; // index into the detect output
    std::size_t skipped = 0;                   // too close to a border
};

/// Rotated 256-pair binary descriptors sampled from the 5x5-smoothed pyramid
/// level of each keypoint.
DescribeResult describe(const ImageBuffer& gray, std::span<const Keypoint> keypoints,
                        const FeatureConfig& config = {});

struct MatchPair {
    std::size_t index_a = 0;
    std::size_t index_b = 0;
    int distance = 0;
};

/// Brute-force Hamming matching with a nearest/second-nearest ratio test and
/// one-to-one pruning (lowest distance wins per b index).
std::vector<MatchPair> match(std::span<const Descriptor256> a,
                             std::span<const Descriptor256> b, double ratio = 0.8);

struct MatchReport {
    std::size_t keypoints_a = 0;
    std::size_t keypoints_b = 0;
    std::vector<MatchPair> matches; // indices refer to detect output order
};

/// detect -> describe -> match on a pair of frames; 3-channel inputs are
/// reduced to luma first.
MatchReport match_count_report(const ImageBuffer& a, const ImageBuffer& b,
                               const FeatureConfig& config = {});

/// JSON object {keypoints_a, keypoints_b, matches, distances:[...]}.
std::string match_report_json(const MatchReport& report);

} // namespace uwe
