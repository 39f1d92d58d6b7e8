#pragma once

#include <string>
#include <vector>

#include "qcia/error.hpp"

namespace qcia {

enum class QualityKind { G, BJ, BL };

// G carries no level; BJ/BL levels are 1-based ladder indices.
struct QualityClass {
    QualityKind kind = QualityKind::G;
    int level = 0;

    static QualityClass good() { return {QualityKind::G, 0}; }
    static QualityClass bj(int level) { return {QualityKind::BJ, level}; }
    static QualityClass bl(int level) { return {QualityKind::BL, level}; }

    bool operator==(const QualityClass& other) const = default;
};

struct QualityTaxonomy {
    std::vector<int> jpeg_factors = {27, 24, 21, 18, 15, 12, 9, 6, 3, 0};
    std::vector<int> downsample_sizes = {80, 72, 64, 56, 48, 40, 32, 24, 16, 8};

    int m() const { return static_cast<int>(jpeg_factors.size()); }
    int n() const { return static_cast<int>(downsample_sizes.size()); }
    int class_count() const { return 1 + m() + n(); }

    bool operator==(const QualityTaxonomy& other) const = default;
};

void validate_taxonomy(const QualityTaxonomy& tax);
void validate_class(const QualityClass& c, const QualityTaxonomy& tax);

// Canonical order [G, BJ_1..BJ_m, BL_1..BL_n]; defines FusedQualityVector and
// registry indexing.
std::vector<QualityClass> enumerate_classes(const QualityTaxonomy& tax);

int class_index(const QualityClass& c, const QualityTaxonomy& tax);
QualityClass class_at(int index, const QualityTaxonomy& tax);

// "G", "BJ_3", "BL_10"; parse accepts the same plus "BJ:3" (CLI form).
std::string class_slug(const QualityClass& c);
QualityClass parse_class(const std::string& text);

std::string kind_name(QualityKind kind);

}  // namespace qcia
