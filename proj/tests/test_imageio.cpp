#include <doctest.h>

#include "qcia/imageio.hpp"
#include "qcia/metrics.hpp"
#include "test_support.hpp"

using namespace qcia;

TEST_SUITE("pnm") {
    TEST_CASE("2x2 PGM byte mapping") {
        std::string text = "P5\n2 2\n255\n";
        std::vector<uint8_t> bytes(text.begin(), text.end());
        bytes.insert(bytes.end(), {0, 64, 128, 255});
        Raster r = pnm_decode(bytes);
        CHECK(r.width == 2);
        CHECK(r.height == 2);
        CHECK(r.channels == 1);
        CHECK(r.pixels == std::vector<uint8_t>{0, 64, 128, 255});
    }

    TEST_CASE("save then load PGM/PPM is bit-identical") {
        test::TempDir dir("pnm");
        for (int channels : {1, 3}) {
            for (uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
                Raster r = test::random_raster(7 + seed % 9, 5 + seed % 7, channels,
                                               seed);
                std::string path = dir.str("rt_" + std::to_string(channels) + "_" +
                                           std::to_string(seed));
                save_image(r, path,
                           channels == 1 ? ImageFormat::PGM : ImageFormat::PPM);
                CHECK(load_image(path) == r);
            }
        }
    }

    TEST_CASE("1x1 PGM sample") {
        test::TempDir dir("pnm1");
        Raster r(1, 1, 1);
        r.pixels = {7};
        save_image(r, dir.str("one.pgm"), ImageFormat::PGM);
        Raster back = load_image(dir.str("one.pgm"));
        CHECK(back.pixels == std::vector<uint8_t>{7});
    }

    TEST_CASE("channel mismatch is rejected") {
        test::TempDir dir("pnmerr");
        Raster rgb(2, 2, 3);
        CHECK_THROWS_WITH_AS(save_image(rgb, dir.str("x.pgm"), ImageFormat::PGM),
                             doctest::Contains("ChannelMismatch"), Error);
        Raster gray(2, 2, 1);
        CHECK_THROWS_AS(save_image(gray, dir.str("x.ppm"), ImageFormat::PPM), Error);
    }

    TEST_CASE("missing file and truncated stream") {
        CHECK_THROWS_AS(load_image("/nonexistent/nowhere.pgm"), Error);
        std::string text = "P5\n4 4\n255\nab";  // 2 of 16 payload bytes
        std::vector<uint8_t> bytes(text.begin(), text.end());
        CHECK_THROWS_AS(pnm_decode(bytes), Error);
    }

    TEST_CASE("header comments are skipped") {
        std::string text = "P5\n# a comment\n2 1\n# another\n255\n";
        std::vector<uint8_t> bytes(text.begin(), text.end());
        bytes.insert(bytes.end(), {9, 10});
        Raster r = pnm_decode(bytes);
        CHECK(r.width == 2);
        CHECK(r.at(0, 0, 0) == 9);
    }
}

TEST_SUITE("quant_table") {
    TEST_CASE("Q=50 is the identity") {
        CHECK(jpeg_quant_table(annex_k_luminance(), 50) == annex_k_luminance());
        CHECK(jpeg_quant_table(annex_k_chrominance(), 50) == annex_k_chrominance());
    }

    TEST_CASE("Q=100 is all ones") {
        QuantTable t = jpeg_quant_table(annex_k_luminance(), 100);
        for (int v : t.values) CHECK(v == 1);
    }

    TEST_CASE("Q=10 scales the first luminance entry to 80") {
        // S = 5000/10 = 500; (16*500 + 50)/100 = 80.
        QuantTable t = jpeg_quant_table(annex_k_luminance(), 10);
        CHECK(t.values[0] == 80);
    }

    TEST_CASE("elementwise monotone nonincreasing in Q") {
        QuantTable prev = jpeg_quant_table(annex_k_luminance(), 1);
        for (int q = 2; q <= 100; ++q) {
            QuantTable cur = jpeg_quant_table(annex_k_luminance(), q);
            for (int i = 0; i < 64; ++i) CHECK(cur.values[i] <= prev.values[i]);
            prev = cur;
        }
    }

    TEST_CASE("quality bounds") {
        CHECK_THROWS_AS(jpeg_quant_table(annex_k_luminance(), 0), Error);
        CHECK_THROWS_AS(jpeg_quant_table(annex_k_luminance(), 101), Error);
    }
}

TEST_SUITE("jpeg_codec") {
    TEST_CASE("constant gray round trip stays within 1") {
        for (int channels : {1, 3}) {
            Raster r(16, 16, channels, 128);
            for (int q : {5, 50, 95}) {
                Raster back = jpeg_decode(jpeg_encode(r, q));
                CHECK(back.width == 16);
                CHECK(back.height == 16);
                CHECK(back.channels == channels);
                for (size_t i = 0; i < back.pixels.size(); ++i)
                    CHECK(std::abs(static_cast<int>(back.pixels[i]) - 128) <= 1);
            }
        }
    }

    TEST_CASE("constant 64x64 luma at any quality") {
        Raster r(64, 64, 1, 128);
        for (int q : {1, 25, 75, 100}) {
            Raster back = jpeg_decode(jpeg_encode(r, q));
            for (uint8_t px : back.pixels)
                CHECK(std::abs(static_cast<int>(px) - 128) <= 1);
        }
    }

    TEST_CASE("dimensions and channels survive odd sizes") {
        for (auto [w, h] : std::vector<std::pair<int, int>>{
                 {1, 1}, {7, 3}, {8, 8}, {17, 9}, {33, 31}}) {
            for (int channels : {1, 3}) {
                Raster r = test::random_raster(w, h, channels, w * 100 + h);
                Raster back = jpeg_decode(jpeg_encode(r, 75));
                CHECK(back.width == w);
                CHECK(back.height == h);
                CHECK(back.channels == channels);
            }
        }
    }

    TEST_CASE("higher quality emits more bytes on textured images") {
        for (uint64_t seed = 0; seed < 10; ++seed) {
            Raster r = test::textured_raster(96, 96, 1, seed);
            CHECK(jpeg_encode(r, 95).size() > jpeg_encode(r, 5).size());
        }
    }

    TEST_CASE("reconstruction error shrinks as quality grows") {
        // Corpus-averaged MAE over the quality ladder must track severity.
        std::vector<int> qualities = {5, 15, 25, 35, 50, 65, 80, 95};
        std::vector<double> mae(qualities.size(), 0.0);
        const int images = 10;
        for (uint64_t seed = 0; seed < images; ++seed) {
            Raster r = test::textured_raster(64, 64, 1, 40 + seed);
            for (size_t qi = 0; qi < qualities.size(); ++qi)
                mae[qi] += mean_abs_error(r, jpeg_decode(jpeg_encode(r, qualities[qi])));
        }
        std::vector<double> severity;
        for (size_t qi = 0; qi < qualities.size(); ++qi)
            severity.push_back(static_cast<double>(100 - qualities[qi]));
        CHECK(spearman(mae, severity) >= 0.9);
    }

    TEST_CASE("decoder rejects garbage") {
        CHECK_THROWS_AS(jpeg_decode({0x00, 0x01, 0x02}), Error);
        std::vector<uint8_t> truncated = jpeg_encode(Raster(16, 16, 1, 77), 80);
        truncated.resize(truncated.size() / 2);
        CHECK_THROWS_AS(jpeg_decode(truncated), Error);
    }

    TEST_CASE("color content survives a high-quality round trip") {
        Raster r(32, 32, 3);
        for (int y = 0; y < 32; ++y)
            for (int x = 0; x < 32; ++x) {
                r.at(x, y, 0) = static_cast<uint8_t>(x * 8);
                r.at(x, y, 1) = static_cast<uint8_t>(y * 8);
                r.at(x, y, 2) = 100;
            }
        Raster back = jpeg_decode(jpeg_encode(r, 95));
        CHECK(mean_abs_error(r, back) < 6.0);
    }
}

TEST_SUITE("resize") {
    TEST_CASE("constant raster stays constant at any size") {
        Raster r(13, 9, 1, 77);
        for (auto [w, h] : std::vector<std::pair<int, int>>{{5, 5}, {26, 18}, {1, 1}}) {
            Raster out = resize_bilinear(r, w, h);
            CHECK(out.width == w);
            CHECK(out.height == h);
            for (uint8_t px : out.pixels) CHECK(px == 77);
        }
    }

    TEST_CASE("512x512 to 40x40 emits exactly 40x40") {
        Raster r = test::random_raster(512, 512, 1, 99);
        Raster out = resize_bilinear(r, 40, 40);
        CHECK(out.width == 40);
        CHECK(out.height == 40);
    }

    TEST_CASE("interpolated sample lies strictly between endpoints") {
        // Bilinear oracle with half-pixel centers: output x=1 of a 1x2 -> 1x3
        // resize samples source position (1+0.5)*(2/3)-0.5 = 0.5 -> mean of
        // the endpoints = 127.5, rounded to 128.
        Raster r(2, 1, 1);
        r.pixels = {0, 255};
        Raster out = resize_bilinear(r, 3, 1);
        CHECK(out.pixels[0] == 0);
        CHECK(out.pixels[1] > 0);
        CHECK(out.pixels[1] < 255);
        CHECK(out.pixels[1] == 128);
        CHECK(out.pixels[2] == 255);
    }

    TEST_CASE("identity resize is bit-identical") {
        Raster r = test::random_raster(17, 23, 3, 5);
        CHECK(resize_bilinear(r, 17, 23) == r);
    }

    TEST_CASE("zero target dimension is rejected") {
        Raster r(4, 4, 1, 0);
        CHECK_THROWS_AS(resize_bilinear(r, 0, 4), Error);
        CHECK_THROWS_AS(resize_bilinear(r, 4, 0), Error);
    }
}
