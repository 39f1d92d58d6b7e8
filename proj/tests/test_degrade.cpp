#include <doctest.h>

#include <set>

#include "qcia/degrade.hpp"
#include "qcia/imageio.hpp"
#include "qcia/metrics.hpp"
#include "test_support.hpp"

using namespace qcia;

namespace {

QualityTaxonomy small_tax() {
    QualityTaxonomy tax;
    tax.jpeg_factors = {27, 15, 3};
    tax.downsample_sizes = {64, 32, 16};
    return tax;
}

std::vector<CorpusItem> small_corpus(int count, uint64_t seed, int identities = 4) {
    CorpusSpec spec;
    spec.count = count;
    spec.seed = seed;
    spec.identities = identities;
    return make_desk_corpus(spec);
}

}  // namespace

TEST_SUITE("taxonomy") {
    TEST_CASE("default taxonomy enumerates 21 classes") {
        QualityTaxonomy tax;
        auto classes = enumerate_classes(tax);
        CHECK(classes.size() == 21);
        CHECK(classes[0] == QualityClass::good());
        CHECK(classes[1] == QualityClass::bj(1));
        CHECK(classes[10] == QualityClass::bj(10));
        CHECK(classes[11] == QualityClass::bl(1));
        CHECK(classes[20] == QualityClass::bl(10));
    }

    TEST_CASE("empty ladders leave only G") {
        QualityTaxonomy tax;
        tax.jpeg_factors = {};
        tax.downsample_sizes = {};
        auto classes = enumerate_classes(tax);
        CHECK(classes.size() == 1);
        CHECK(classes[0] == QualityClass::good());
    }

    TEST_CASE("m=2 n=1 canonical order") {
        QualityTaxonomy tax;
        tax.jpeg_factors = {20, 10};
        tax.downsample_sizes = {32};
        auto classes = enumerate_classes(tax);
        REQUIRE(classes.size() == 4);
        CHECK(classes[0] == QualityClass::good());
        CHECK(classes[1] == QualityClass::bj(1));
        CHECK(classes[2] == QualityClass::bj(2));
        CHECK(classes[3] == QualityClass::bl(1));
    }

    TEST_CASE("class index round trip") {
        QualityTaxonomy tax = small_tax();
        for (int i = 0; i < tax.class_count(); ++i)
            CHECK(class_index(class_at(i, tax), tax) == i);
    }

    TEST_CASE("invalid levels are rejected") {
        QualityTaxonomy tax = small_tax();
        CHECK_THROWS_AS(validate_class(QualityClass::bj(4), tax), Error);
        CHECK_THROWS_AS(validate_class(QualityClass::bl(0), tax), Error);
        CHECK_THROWS_AS(validate_class({QualityKind::G, 2}, tax), Error);
    }

    TEST_CASE("slug round trip and CLI form") {
        CHECK(class_slug(QualityClass::bj(3)) == "BJ_3");
        CHECK(parse_class("BJ_3") == QualityClass::bj(3));
        CHECK(parse_class("BL:10") == QualityClass::bl(10));
        CHECK(parse_class("G") == QualityClass::good());
        CHECK_THROWS_AS(parse_class("XX:1"), Error);
    }

    TEST_CASE("non-decreasing ladders are rejected") {
        QualityTaxonomy tax;
        tax.jpeg_factors = {10, 10};
        CHECK_THROWS_AS(validate_taxonomy(tax), Error);
    }
}

TEST_SUITE("degrade") {
    TEST_CASE("G is the identity bit for bit") {
        Raster r = test::textured_raster(96, 96, 1, 7);
        CHECK(degrade(r, QualityClass::good(), small_tax()) == r);
    }

    TEST_CASE("dimensions and channels always preserved") {
        QualityTaxonomy tax = small_tax();
        for (int channels : {1, 3}) {
            Raster r = test::textured_raster(96, 80, channels, 11);
            for (const QualityClass& c : enumerate_classes(tax)) {
                Raster out = degrade(r, c, tax);
                CHECK(out.width == r.width);
                CHECK(out.height == r.height);
                CHECK(out.channels == r.channels);
            }
        }
    }

    TEST_CASE("harsher JPEG factor raises reconstruction error") {
        QualityTaxonomy tax;  // default: BJ level 1 = factor 27, level 10 = factor 0
        Raster r = test::textured_raster(96, 96, 1, 13);
        double mild = mean_abs_error(r, degrade(r, QualityClass::bj(1), tax));
        double harsh = mean_abs_error(r, degrade(r, QualityClass::bj(10), tax));
        CHECK(harsh > mild);
    }

    TEST_CASE("BL severity ordering over the full ladder") {
        QualityTaxonomy tax;
        const int images = 10;
        std::vector<double> mae(tax.n(), 0.0);
        for (uint64_t seed = 0; seed < images; ++seed) {
            Raster r = test::textured_raster(96, 96, 1, 60 + seed);
            for (int level = 1; level <= tax.n(); ++level)
                mae[level - 1] +=
                    mean_abs_error(r, degrade(r, QualityClass::bl(level), tax));
        }
        std::vector<double> severity;
        for (int level = 1; level <= tax.n(); ++level)
            severity.push_back(static_cast<double>(level));
        CHECK(spearman(mae, severity) >= 0.95);
    }

    TEST_CASE("invalid class level propagates") {
        Raster r(16, 16, 1, 0);
        CHECK_THROWS_AS(degrade(r, QualityClass::bj(9), small_tax()), Error);
    }
}

TEST_SUITE("datasets") {
    TEST_CASE("per-class build covers classes x corpus") {
        test::TempDir dir("perclass");
        QualityTaxonomy tax = small_tax();
        auto corpus = small_corpus(5, 21);
        auto manifests = build_per_class_datasets(corpus, tax, dir.str());
        REQUIRE(manifests.size() == 7);
        for (const auto& manifest : manifests) {
            CHECK(manifest.entries.size() == 5);
            for (const auto& entry : manifest.entries)
                CHECK(std::filesystem::exists(entry.path));
        }
        // payload labels identical across classes for each source image
        for (size_t i = 0; i < corpus.size(); ++i)
            for (const auto& manifest : manifests) {
                CHECK(manifest.entries[i].boxes == corpus[i].boxes);
                CHECK(manifest.entries[i].identity == corpus[i].identity);
            }
    }

    TEST_CASE("non-G classes change pixels for every corpus image") {
        test::TempDir dir("bitdiff");
        QualityTaxonomy tax = small_tax();
        auto corpus = small_corpus(4, 33);
        auto manifests = build_per_class_datasets(corpus, tax, dir.str());
        auto classes = enumerate_classes(tax);
        for (size_t ci = 0; ci < classes.size(); ++ci)
            for (size_t i = 0; i < corpus.size(); ++i) {
                Raster stored = load_image(manifests[ci].entries[i].path);
                if (classes[ci] == QualityClass::good())
                    CHECK(stored == corpus[i].image);
                else
                    CHECK(stored != corpus[i].image);
            }
    }

    TEST_CASE("mixed dataset is deterministic in the seed") {
        test::TempDir dir_a("mixa");
        test::TempDir dir_b("mixb");
        QualityTaxonomy tax = small_tax();
        auto corpus = small_corpus(12, 5);
        DatasetManifest a = build_mixed_dataset(corpus, tax, 42, dir_a.str());
        DatasetManifest b = build_mixed_dataset(corpus, tax, 42, dir_b.str());
        REQUIRE(a.entries.size() == b.entries.size());
        for (size_t i = 0; i < a.entries.size(); ++i)
            CHECK(a.entries[i].quality == b.entries[i].quality);
    }

    TEST_CASE("mixed class draw is roughly uniform") {
        // 3-sigma multinomial band around count/classes.
        test::TempDir dir("mixu");
        QualityTaxonomy tax;  // 21 classes
        auto corpus = small_corpus(420, 8, 0);
        DatasetManifest manifest = build_mixed_dataset(corpus, tax, 7, dir.str());
        std::vector<int> counts(tax.class_count(), 0);
        for (const auto& entry : manifest.entries)
            ++counts[class_index(entry.quality, tax)];
        const double expected = 420.0 / 21.0;  // 20 per class
        const double sigma = std::sqrt(420.0 * (1.0 / 21.0) * (20.0 / 21.0));
        for (int count : counts) {
            CHECK(count >= expected - 3 * sigma);
            CHECK(count <= expected + 3 * sigma);
        }
    }

    TEST_CASE("default taxonomy yields 21 manifests x corpus size") {
        test::TempDir dir("perclass21");
        QualityTaxonomy tax;  // default full ladders
        CorpusSpec spec;
        spec.count = 5;
        spec.width = 96;
        spec.height = 96;
        spec.seed = 51;
        auto manifests = build_per_class_datasets(make_desk_corpus(spec), tax, dir.str());
        REQUIRE(manifests.size() == 21);
        for (const auto& manifest : manifests) CHECK(manifest.entries.size() == 5);
    }

    TEST_CASE("2100-image mixed set keeps every class count in [60, 140]") {
        test::TempDir dir("mix2100");
        QualityTaxonomy tax;  // 21 classes, expectation 100 per class
        CorpusSpec spec;
        spec.count = 2100;
        spec.width = 16;
        spec.height = 16;
        spec.seed = 52;
        DatasetManifest manifest =
            build_mixed_dataset(make_desk_corpus(spec), tax, 29, dir.str());
        std::vector<int> counts(tax.class_count(), 0);
        for (const auto& entry : manifest.entries)
            ++counts[class_index(entry.quality, tax)];
        for (int count : counts) {
            CHECK(count >= 60);
            CHECK(count <= 140);
        }
    }

    TEST_CASE("single image mixed set") {
        test::TempDir dir("mix1");
        auto corpus = small_corpus(1, 3);
        DatasetManifest manifest =
            build_mixed_dataset(corpus, small_tax(), 1, dir.str());
        REQUIRE(manifest.entries.size() == 1);
        CHECK_NOTHROW(validate_class(manifest.entries[0].quality, small_tax()));
    }

    TEST_CASE("manifest JSON round trip") {
        test::TempDir dir("mani");
        QualityTaxonomy tax = small_tax();
        auto corpus = small_corpus(6, 17);
        DatasetManifest manifest = build_mixed_dataset(corpus, tax, 9, dir.str());
        write_manifest(manifest, dir.str("manifest.json"));
        DatasetManifest back = read_manifest(dir.str("manifest.json"));
        CHECK(back == manifest);
    }

    TEST_CASE("duplicate paths are rejected") {
        DatasetManifest manifest;
        manifest.taxonomy = small_tax();
        manifest.entries.push_back({"a.pgm", QualityClass::good(), {}, {}});
        manifest.entries.push_back({"a.pgm", QualityClass::bj(1), {}, {}});
        CHECK_THROWS_AS(validate_manifest(manifest), Error);
    }

    TEST_CASE("empty corpus is rejected") {
        CHECK_THROWS_AS(build_per_class_datasets({}, small_tax(), "/tmp/unused"),
                        Error);
        CHECK_THROWS_AS(build_mixed_dataset({}, small_tax(), 1, "/tmp/unused"), Error);
    }
}
