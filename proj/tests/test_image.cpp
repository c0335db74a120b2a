#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <initializer_list>
#include <limits>
#include <string>
#include <vector>

#include "core/error.hpp"
#include "core/filters.hpp"
#include "core/image.hpp"
#include "support/oracles.hpp"
#include "support/synth.hpp"

using uwe::ImageBuffer;

namespace {

std::vector<std::uint8_t> pnm_bytes(const std::string& header,
                                    std::initializer_list<int> payload) {
    std::vector<std::uint8_t> bytes(header.begin(), header.end());
    for (int b : payload)
        bytes.push_back(static_cast<std::uint8_t>(b));
    return bytes;
}

} // namespace

TEST_CASE("decode_pnm reads P6 and P5 with exact byte/255 samples") {
    const auto rgb = pnm_bytes("P6 2 1 255 ", {255, 0, 0, 0, 0, 255});
    const ImageBuffer img = uwe::decode_pnm(rgb);
    CHECK(img.width() == 2);
    CHECK(img.height() == 1);
    CHECK(img.channels() == 3);
    CHECK(img.at(0, 0, 0) == 1.0);
    CHECK(img.at(0, 0, 1) == 0.0);
    CHECK(img.at(0, 0, 2) == 0.0);
    CHECK(img.at(1, 0, 2) == 1.0);

    const auto gray = pnm_bytes("P5 1 1 255 ", {128});
    const ImageBuffer g = uwe::decode_pnm(gray);
    CHECK(g.channels() == 1);
    CHECK(g.at(0, 0) == 128.0 / 255.0);
}

TEST_CASE("decode_pnm error paths") {
    SUBCASE("truncated payload") {
        const auto bytes = pnm_bytes("P6 2 2 255 ", {1, 2, 3, 4, 5, 6});
        CHECK_THROWS_WITH_AS(uwe::decode_pnm(bytes),
                             doctest::Contains("shorter"), uwe::Error);
        try {
            uwe::decode_pnm(bytes);
        } catch (const uwe::Error& e) {
            CHECK(e.code() == uwe::Errc::truncated_payload);
        }
    }
    SUBCASE("wrong maxval") {
        const auto bytes = pnm_bytes("P6 1 1 65535 ", {0, 0, 0});
        CHECK_THROWS_AS(uwe::decode_pnm(bytes), uwe::Error);
    }
    SUBCASE("bad magic") {
        const auto bytes = pnm_bytes("P3 1 1 255 ", {0, 0, 0});
        CHECK_THROWS_AS(uwe::decode_pnm(bytes), uwe::Error);
    }
    SUBCASE("garbage header") {
        const auto bytes = pnm_bytes("P6 x 1 255 ", {0, 0, 0});
        CHECK_THROWS_AS(uwe::decode_pnm(bytes), uwe::Error);
    }
    SUBCASE("trailing bytes") {
        const auto bytes = pnm_bytes("P5 1 1 255 ", {7, 7});
        CHECK_THROWS_AS(uwe::decode_pnm(bytes), uwe::Error);
    }
}

TEST_CASE("encode_pnm quantization") {
    ImageBuffer one(1, 1, 1, 1.0);
    auto bytes = uwe::encode_pnm(one);
    CHECK(bytes.back() == 255);

    ImageBuffer mid(1, 1, 1, 128.0 / 255.0);
    CHECK(uwe::encode_pnm(mid).back() == 128);

    ImageBuffer red(1, 1, 3);
    red.at(0, 0, 0) = 1.0;
    bytes = uwe::encode_pnm(red);
    const std::size_t n = bytes.size();
    CHECK(bytes[n - 3] == 255);
    CHECK(bytes[n - 2] == 0);
    CHECK(bytes[n - 1] == 0);

    // Out-of-range samples clamp instead of wrapping.
    ImageBuffer hot = ImageBuffer::from_samples(1, 1, 1, {1.7});
    CHECK(uwe::encode_pnm(hot).back() == 255);
}

TEST_CASE("decode/encode round trip is byte-identical for 8-bit sources") {
    synth::Rng rng{41};
    for (int trial = 0; trial < 8; ++trial) {
        const int w = rng.uniform_int(1, 9);
        const int h = rng.uniform_int(1, 9);
        const int channels = trial % 2 == 0 ? 3 : 1;
        std::string header = channels == 3 ? "P6\n" : "P5\n";
        header += std::to_string(w) + " " + std::to_string(h) + "\n255\n";
        std::vector<std::uint8_t> bytes(header.begin(), header.end());
        for (int i = 0; i < w * h * channels; ++i)
            bytes.push_back(static_cast<std::uint8_t>(rng.next() & 0xFF));

        const ImageBuffer img = uwe::decode_pnm(bytes);
        CHECK(uwe::encode_pnm(img) == bytes);
    }
}

TEST_CASE("to_grayscale uses BT.601 weights") {
    ImageBuffer img(1, 1, 3, 1.0);
    CHECK(uwe::to_grayscale(img).at(0, 0) == doctest::Approx(1.0).epsilon(1e-12));

    ImageBuffer black(1, 1, 3, 0.0);
    CHECK(uwe::to_grayscale(black).at(0, 0) == 0.0);

    ImageBuffer red(1, 1, 3);
    red.at(0, 0, 0) = 1.0;
    CHECK(uwe::to_grayscale(red).at(0, 0) == doctest::Approx(0.299).epsilon(1e-12));

    ImageBuffer gray1(1, 1, 1, 0.5);
    CHECK_THROWS_AS(uwe::to_grayscale(gray1), uwe::Error);
}

TEST_CASE("rgb_to_lab endpoints and reference gray") {
    ImageBuffer white(1, 1, 3, 1.0);
    const ImageBuffer lw = uwe::rgb_to_lab(white);
    CHECK(lw.at(0, 0, 0) == doctest::Approx(100.0).epsilon(1e-9));
    CHECK(std::abs(lw.at(0, 0, 1)) < 1e-3);
    CHECK(std::abs(lw.at(0, 0, 2)) < 1e-3);

    ImageBuffer black(1, 1, 3, 0.0);
    const ImageBuffer lb = uwe::rgb_to_lab(black);
    CHECK(std::abs(lb.at(0, 0, 0)) < 1e-9);
    CHECK(std::abs(lb.at(0, 0, 1)) < 1e-9);
    CHECK(std::abs(lb.at(0, 0, 2)) < 1e-9);

    // Mid gray against the reference conversion with published constants.
    ImageBuffer mid(1, 1, 3, 0.5);
    const ImageBuffer lm = uwe::rgb_to_lab(mid);
    double rl, ra, rb;
    oracles::lab_reference(0.5, 0.5, 0.5, rl, ra, rb);
    CHECK(lm.at(0, 0, 0) == doctest::Approx(rl).epsilon(1e-4));
    CHECK(std::abs(lm.at(0, 0, 1)) < 1e-9);
    CHECK(std::abs(lm.at(0, 0, 2)) < 1e-9);

    // Random colors stay within the loose agreement band of the two
    // whitepoint conventions.
    synth::Rng rng{7};
    for (int i = 0; i < 20; ++i) {
        const double r = rng.uniform(), g = rng.uniform(), b = rng.uniform();
        ImageBuffer px(1, 1, 3);
        px.at(0, 0, 0) = r;
        px.at(0, 0, 1) = g;
        px.at(0, 0, 2) = b;
        const ImageBuffer lab = uwe::rgb_to_lab(px);
        oracles::lab_reference(r, g, b, rl, ra, rb);
        CHECK(lab.at(0, 0, 0) == doctest::Approx(rl).epsilon(1e-4));
        CHECK(std::abs(lab.at(0, 0, 1) - ra) < 1e-3);
        CHECK(std::abs(lab.at(0, 0, 2) - rb) < 1e-3);
    }
}

TEST_CASE("rgb_to_hsv hexcone cases") {
    ImageBuffer red(1, 1, 3);
    red.at(0, 0, 0) = 1.0;
    ImageBuffer hsv = uwe::rgb_to_hsv(red);
    CHECK(hsv.at(0, 0, 0) == 0.0);
    CHECK(hsv.at(0, 0, 1) == 1.0);
    CHECK(hsv.at(0, 0, 2) == 1.0);

    ImageBuffer gray(1, 1, 3, 0.3);
    hsv = uwe::rgb_to_hsv(gray);
    CHECK(hsv.at(0, 0, 0) == 0.0);
    CHECK(hsv.at(0, 0, 1) == 0.0);
    CHECK(hsv.at(0, 0, 2) == doctest::Approx(0.3).epsilon(1e-12));

    ImageBuffer violet(1, 1, 3);
    violet.at(0, 0, 0) = 0.5;
    violet.at(0, 0, 1) = 0.25;
    violet.at(0, 0, 2) = 0.75;
    hsv = uwe::rgb_to_hsv(violet);
    CHECK(hsv.at(0, 0, 0) == doctest::Approx(270.0).epsilon(1e-12));
    CHECK(hsv.at(0, 0, 1) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(hsv.at(0, 0, 2) == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("color conversions are pixel-local under permutation") {
    synth::Rng rng{11};
    ImageBuffer img = synth::random_image(6, 4, 3, rng);
    ImageBuffer swapped = img;
    // Swap two pixels everywhere in channel-planar storage.
    for (int c = 0; c < 3; ++c)
        std::swap(swapped.at(1, 1, c), swapped.at(4, 2, c));

    using Convert = ImageBuffer (*)(const ImageBuffer&);
    for (Convert convert : {Convert(&uwe::rgb_to_lab), Convert(&uwe::rgb_to_hsv)}) {
        const ImageBuffer a = convert(img);
        const ImageBuffer ap = convert(swapped);
        for (int c = 0; c < 3; ++c) {
            CHECK(a.at(1, 1, c) == ap.at(4, 2, c));
            CHECK(a.at(4, 2, c) == ap.at(1, 1, c));
            CHECK(a.at(0, 0, c) == ap.at(0, 0, c));
        }
    }
}

TEST_CASE("achromatic inputs always give zero saturation") {
    synth::Rng rng{13};
    for (int i = 0; i < 32; ++i) {
        const double v = rng.uniform();
        ImageBuffer px(1, 1, 3, v);
        const ImageBuffer hsv = uwe::rgb_to_hsv(px);
        CHECK(hsv.at(0, 0, 0) == 0.0);
        CHECK(hsv.at(0, 0, 1) == 0.0);
    }
}

TEST_CASE("box_filter basics and oracle equivalence") {
    synth::Rng rng{17};
    const ImageBuffer img = synth::random_image(8, 8, 1, rng);

    SUBCASE("radius 0 is the identity") {
        const ImageBuffer out = uwe::box_filter(img, 0);
        CHECK(out.samples() == img.samples());
    }
    SUBCASE("constant image stays constant") {
        const ImageBuffer flat(5, 7, 1, 0.42);
        for (int r : {1, 2, 3}) {
            const ImageBuffer out = uwe::box_filter(flat, r);
            for (double v : out.samples())
                CHECK(v == doctest::Approx(0.42).epsilon(1e-15));
        }
    }
    SUBCASE("random 8x8 radius 2 matches the nested-loop oracle") {
        const ImageBuffer out = uwe::box_filter(img, 2);
        const ImageBuffer ref = oracles::box_mean_naive(img, 2);
        for (std::size_t i = 0; i < out.samples().size(); ++i)
            CHECK(std::abs(out.samples()[i] - ref.samples()[i]) < 1e-9);
    }
    SUBCASE("property sweep up to 16x16, radius <= 3") {
        for (int trial = 0; trial < 12; ++trial) {
            const int w = rng.uniform_int(1, 16);
            const int h = rng.uniform_int(1, 16);
            const int r = rng.uniform_int(0, 3);
            const ImageBuffer x = synth::random_image(w, h, 1, rng);
            const ImageBuffer out = uwe::box_filter(x, r);
            const ImageBuffer ref = oracles::box_mean_naive(x, r);
            for (std::size_t i = 0; i < out.samples().size(); ++i)
                CHECK(std::abs(out.samples()[i] - ref.samples()[i]) < 1e-9);
        }
    }
}

TEST_CASE("gaussian_window shape and limits") {
    const std::vector<double> single = uwe::gaussian_window(1, 2.0);
    CHECK(single.size() == 1);
    CHECK(single[0] == doctest::Approx(1.0).epsilon(1e-15));

    const std::vector<double> win = uwe::gaussian_window(11, 1.5);
    double sum = 0.0;
    for (double v : win)
        sum += v;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    // Radial symmetry: reversing the grid changes nothing.
    for (std::size_t i = 0; i < win.size(); ++i)
        CHECK(win[i] == doctest::Approx(win[win.size() - 1 - i]).epsilon(1e-12));

    const std::vector<double> flat = uwe::gaussian_window(3, 1e6);
    for (double v : flat)
        CHECK(std::abs(v - 1.0 / 9.0) < 1e-6);

    CHECK_THROWS_AS(uwe::gaussian_window(4, 1.0), uwe::Error);
    CHECK_THROWS_AS(uwe::gaussian_window(3, 0.0), uwe::Error);
}

TEST_CASE("downscale bilinear taps") {
    ImageBuffer flat(2, 2, 1, 0.5);
    const ImageBuffer half = uwe::downscale(flat, 2.0);
    CHECK(half.width() == 1);
    CHECK(half.height() == 1);
    CHECK(half.at(0, 0) == doctest::Approx(0.5).epsilon(1e-15));

    // 4x4 checkerboard sampled at cell centers averages to one half.
    ImageBuffer board(4, 4, 1);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x)
            board.at(x, y) = (x + y) % 2 == 0 ? 0.0 : 1.0;
    const ImageBuffer out = uwe::downscale(board, 2.0);
    CHECK(out.width() == 2);
    CHECK(out.height() == 2);
    for (double v : out.samples())
        CHECK(v == doctest::Approx(0.5).epsilon(1e-12));

    ImageBuffer tiny(1, 1, 1, 0.0);
    CHECK_THROWS_AS(uwe::downscale(tiny, 1.2), uwe::Error);
    try {
        uwe::downscale(tiny, 1.2);
    } catch (const uwe::Error& e) {
        CHECK(e.code() == uwe::Errc::too_small);
    }
}

TEST_CASE("ImageBuffer validation") {
    CHECK_THROWS_AS(ImageBuffer(0, 1, 1), uwe::Error);
    CHECK_THROWS_AS(ImageBuffer(1, 1, 2), uwe::Error);
    CHECK_THROWS_AS(ImageBuffer::from_samples(2, 2, 1, {0.0, 0.0, 0.0}), uwe::Error);
    CHECK_THROWS_AS(
        ImageBuffer::from_samples(1, 1, 1, {std::numeric_limits<double>::quiet_NaN()}),
        uwe::Error);
}
