#include "core/features.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "core/error.hpp"
#include "core/filters.hpp"

namespace uwe {

void FeatureConfig::validate() const {
    if (n_features < 1)
        raise(Errc::invalid_argument, "n_features must be >= 1");
    if (!(fast_threshold > 0.0))
        raise(Errc::invalid_argument, "fast_threshold must be positive");
    if (levels < 1)
        raise(Errc::invalid_argument, "levels must be >= 1");
    if (!(scale_factor > 1.0))
        raise(Errc::invalid_argument, "scale_factor must exceed 1");
    if (!(match_ratio > 0.0 && match_ratio <= 1.0))
        raise(Errc::invalid_argument, "match_ratio must be in (0,1]");
}

int hamming_distance(const Descriptor256& a, const Descriptor256& b) {
    int d = 0;
    for (int i = 0; i < 4; ++i)
        d += std::popcount(a.words[i] ^ b.words[i]);
    return d;
}

namespace {

constexpr int kMinLevelDim = 32;
constexpr int kOrientationRadius = 15;
constexpr int kDescribeMargin = 23;   // covers rotated 31x31 pattern points
constexpr int kSmoothRadius = 2;      // 5x5 pre-smoothing for descriptor taps

// Bresenham circle of radius 3, clockwise from 12 o'clock.
constexpr int kRing[16][2] = {
    {0, -3}, {1, -3}, {2, -2}, {3, -1}, {3, 0},  {3, 1},  {2, 2},  {1, 3},
    {0, 3},  {-1, 3}, {-2, 2}, {-3, 1}, {-3, 0}, {-3, -1}, {-2, -2}, {-1, -3},
};

struct PatternPoint {
    int px, py, qx, qy;
};

struct SplitMix64 {
    std::uint64_t state;

    std::uint64_t next() {
        state += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
};

// The fixed 256-pair sampling pattern. Built once from a constant seed so
// descriptors are identical across builds and platforms.
const std::array<PatternPoint, 256>& sampling_pattern() {
    static const std::array<PatternPoint, 256> pattern = [] {
        std::array<PatternPoint, 256> p{};
        SplitMix64 rng{0x256BF5EEDULL};
        const auto coord = [&]() {
            return static_cast<int>(rng.next() % 31) - 15;
        };
        for (auto& pair : p) {
            do {
                pair.px = coord();
                pair.py = coord();
                pair.qx = coord();
                pair.qy = coord();
            } while (pair.px == pair.qx && pair.py == pair.qy);
        }
        return p;
    }();
    return pattern;
}

std::vector<ImageBuffer> build_pyramid(const ImageBuffer& gray,
                                       const FeatureConfig& config) {
    std::vector<ImageBuffer> levels;
    levels.push_back(gray);
    while (static_cast<int>(levels.size()) < config.levels) {
        const ImageBuffer& prev = levels.back();
        const int nw = static_cast<int>(prev.width() / config.scale_factor);
        const int nh = static_cast<int>(prev.height() / config.scale_factor);
        if (nw < kMinLevelDim || nh < kMinLevelDim)
            break;
        levels.push_back(downscale(prev, config.scale_factor));
    }
    return levels;
}

// Longest circular run of `target` states; the ring is scanned doubled so
// wrap-around runs count once.
int longest_run(const int (&state)[16], int target, int* run_start) {
    int best = 0;
    int best_start = 0;
    int current = 0;
    for (int i = 0; i < 32; ++i) {
        if (state[i & 15] == target) {
            ++current;
            if (current > best) {
                best = current;
                best_start = i - current + 1;
            }
        } else {
            current = 0;
        }
    }
    best = std::min(best, 16);
    if (run_start != nullptr)
        *run_start = best_start;
    return best;
}

// Centered intensity centroid over the circular patch clipped to the image;
// centering keeps the angle invariant to constant intensity shifts even when
// the patch is clipped.
double centroid_orientation(const ImageBuffer& img, int cx, int cy) {
    double sum = 0.0;
    int count = 0;
    for (int dy = -kOrientationRadius; dy <= kOrientationRadius; ++dy) {
        const int y = cy + dy;
        if (y < 0 || y >= img.height())
            continue;
        for (int dx = -kOrientationRadius; dx <= kOrientationRadius; ++dx) {
            if (dx * dx + dy * dy > kOrientationRadius * kOrientationRadius)
                continue;
            const int x = cx + dx;
            if (x < 0 || x >= img.width())
                continue;
            sum += img.at(x, y);
            ++count;
        }
    }
    const double mean = sum / count;
    double m10 = 0.0;
    double m01 = 0.0;
    for (int dy = -kOrientationRadius; dy <= kOrientationRadius; ++dy) {
        const int y = cy + dy;
        if (y < 0 || y >= img.height())
            continue;
        for (int dx = -kOrientationRadius; dx <= kOrientationRadius; ++dx) {
            if (dx * dx + dy * dy > kOrientationRadius * kOrientationRadius)
                continue;
            const int x = cx + dx;
            if (x < 0 || x >= img.width())
                continue;
            const double v = img.at(x, y) - mean;
            m10 += dx * v;
            m01 += dy * v;
        }
    }
    if (m10 == 0.0 && m01 == 0.0)
        return 0.0;
    double angle = std::atan2(m01, m10);
    if (angle < 0.0)
        angle += 2.0 * 3.14159265358979323846;
    return angle;
}

} // namespace

std::vector<Keypoint> detect(const ImageBuffer& gray, const FeatureConfig& config) {
    config.validate();
    if (gray.channels() != 1)
        raise(Errc::channel_mismatch, "detect expects a single-channel image");
    if (gray.width() < kMinLevelDim || gray.height() < kMinLevelDim)
        raise(Errc::too_small, "detect needs at least a 32x32 image");

    const std::vector<ImageBuffer> pyramid = build_pyramid(gray, config);
    std::vector<Keypoint> candidates;

    double level_scale = 1.0;
    for (std::size_t level = 0; level < pyramid.size(); ++level) {
        const ImageBuffer& img = pyramid[level];
        for (int y = 3; y < img.height() - 3; ++y) {
            for (int x = 3; x < img.width() - 3; ++x) {
                const double center = img.at(x, y);
                int state[16];
                for (int i = 0; i < 16; ++i) {
                    const double v = img.at(x + kRing[i][0], y + kRing[i][1]);
                    state[i] = v > center + config.fast_threshold   ? 1
                               : v < center - config.fast_threshold ? -1
                                                                    : 0;
                }
                int start = 0;
                int run = longest_run(state, 1, &start);
                if (run < 9)
                    run = longest_run(state, -1, &start);
                if (run < 9)
                    continue;
                double response = 0.0;
                for (int i = start; i < start + run; ++i)
                    response += std::abs(img.at(x + kRing[i & 15][0],
                                                y + kRing[i & 15][1]) -
                                         center);

                Keypoint kp;
                kp.x = (x + 0.5) * level_scale - 0.5;
                kp.y = (y + 0.5) * level_scale - 0.5;
                kp.level = static_cast<int>(level);
                kp.orientation = centroid_orientation(img, x, y);
                kp.response = response;
                candidates.push_back(kp);
            }
        }
        level_scale *= config.scale_factor;
    }

    // Stable sort keeps the level-major, row-major order among equal scores.
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Keypoint& a, const Keypoint& b) {
                         return a.response > b.response;
                     });
    if (candidates.size() > static_cast<std::size_t>(config.n_features))
        candidates.resize(static_cast<std::size_t>(config.n_features));
    return candidates;
}

DescribeResult describe(const ImageBuffer& gray, std::span<const Keypoint> keypoints,
                        const FeatureConfig& config) {
    config.validate();
    if (gray.channels() != 1)
        raise(Errc::channel_mismatch, "describe expects a single-channel image");

    const std::vector<ImageBuffer> pyramid = build_pyramid(gray, config);
    std::vector<ImageBuffer> smoothed;
    smoothed.reserve(pyramid.size());
    for (const ImageBuffer& level : pyramid)
        smoothed.push_back(box_filter(level, kSmoothRadius));

    const auto& pattern = sampling_pattern();
    DescribeResult result;
    for (std::size_t i = 0; i < keypoints.size(); ++i) {
        const Keypoint& kp = keypoints[i];
        if (kp.level < 0 || kp.level >= static_cast<int>(pyramid.size())) {
            ++result.skipped;
            continue;
        }
        const ImageBuffer& img = smoothed[static_cast<std::size_t>(kp.level)];
        const double scale = std::pow(config.scale_factor, kp.level);
        const long cx = std::lround((kp.x + 0.5) / scale - 0.5);
        const long cy = std::lround((kp.y + 0.5) / scale - 0.5);
        if (cx < kDescribeMargin || cy < kDescribeMargin ||
            cx >= img.width() - kDescribeMargin ||
            cy >= img.height() - kDescribeMargin) {
            ++result.skipped;
            continue;
        }
        const double c = std::cos(kp.orientation);
        const double s = std::sin(kp.orientation);
        Descriptor256 desc;
        for (int bit = 0; bit < 256; ++bit) {
            const PatternPoint& pp = pattern[static_cast<std::size_t>(bit)];
            const long px = cx + std::lround(c * pp.px - s * pp.py);
            const long py = cy + std::lround(s * pp.px + c * pp.py);
            const long qx = cx + std::lround(c * pp.qx - s * pp.qy);
            const long qy = cy + std::lround(s * pp.qx + c * pp.qy);
            if (img.at(static_cast<int>(px), static_cast<int>(py)) <
                img.at(static_cast<int>(qx), static_cast<int>(qy)))
                desc.set_bit(bit);
        }
        result.descriptors.push_back(desc);
        result.keypoint_indices.push_back(i);
    }
    return result;
}

std::vector<MatchPair> match(std::span<const Descriptor256> a,
                             std::span<const Descriptor256> b, double ratio) {
    std::vector<MatchPair> out;
    if (a.empty() || b.empty())
        return out;

    // Best candidate per b index after the ratio test; lower distance wins,
    // then lower a index.
    std::vector<long> best_for_b(b.size(), -1);
    std::vector<int> best_dist_b(b.size(), std::numeric_limits<int>::max());

    for (std::size_t ia = 0; ia < a.size(); ++ia) {
        int d1 = std::numeric_limits<int>::max();
        int d2 = std::numeric_limits<int>::max();
        std::size_t j1 = 0;
        for (std::size_t ib = 0; ib < b.size(); ++ib) {
            const int d = hamming_distance(a[ia], b[ib]);
            if (d < d1) {
                d2 = d1;
                d1 = d;
                j1 = ib;
            } else if (d < d2) {
                d2 = d;
            }
        }
        if (b.size() == 1)
            d2 = 257; // no second neighbor to compare against
        if (!(d1 < ratio * d2))
            continue;
        if (d1 < best_dist_b[j1]) {
            best_dist_b[j1] = d1;
            best_for_b[j1] = static_cast<long>(ia);
        }
    }

    for (std::size_t ib = 0; ib < b.size(); ++ib)
        if (best_for_b[ib] >= 0)
            out.push_back({static_cast<std::size_t>(best_for_b[ib]), ib,
                           best_dist_b[ib]});
    std::sort(out.begin(), out.end(), [](const MatchPair& x, const MatchPair& y) {
        return x.index_a < y.index_a;
    });
    return out;
}

MatchReport match_count_report(const ImageBuffer& a, const ImageBuffer& b,
                               const FeatureConfig& config) {
    const ImageBuffer ga = a.channels() == 3 ? to_grayscale(a) : a;
    const ImageBuffer gb = b.channels() == 3 ? to_grayscale(b) : b;

    const std::vector<Keypoint> kps_a = detect(ga, config);
    const std::vector<Keypoint> kps_b = detect(gb, config);
    const DescribeResult desc_a = describe(ga, kps_a, config);
    const DescribeResult desc_b = describe(gb, kps_b, config);

    MatchReport report;
    report.keypoints_a = kps_a.size();
    report.keypoints_b = kps_b.size();
    report.matches = match(desc_a.descriptors, desc_b.descriptors, config.match_ratio);
    for (MatchPair& m : report.matches) {
        m.index_a = desc_a.keypoint_indices[m.index_a];
        m.index_b = desc_b.keypoint_indices[m.index_b];
    }
    return report;
}

std::string match_report_json(const MatchReport& report) {
    nlohmann::json j;
    j["keypoints_a"] = report.keypoints_a;
    j["keypoints_b"] = report.keypoints_b;
    j["matches"] = report.matches.size();
    nlohmann::json distances = nlohmann::json::array();
    for (const MatchPair& m : report.matches)
        distances.push_back(m.distance);
    j["distances"] = std::move(distances);
    return j.dump();
}

} // namespace uwe
