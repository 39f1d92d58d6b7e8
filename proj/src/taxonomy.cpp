#include <charconv>

#include "qcia/taxonomy.hpp"

namespace qcia {

void validate_taxonomy(const QualityTaxonomy& tax) {
    for (size_t i = 1; i < tax.jpeg_factors.size(); ++i)
        if (tax.jpeg_factors[i] >= tax.jpeg_factors[i - 1])
            raise(ErrorCode::InvalidClass, "jpeg_factors must be strictly decreasing");
    for (size_t i = 1; i < tax.downsample_sizes.size(); ++i)
        if (tax.downsample_sizes[i] >= tax.downsample_sizes[i - 1])
            raise(ErrorCode::InvalidClass, "downsample_sizes must be strictly decreasing");
    for (int f : tax.jpeg_factors)
        if (f < 0 || f > 100)
            raise(ErrorCode::InvalidClass, "jpeg factor outside [0, 100]");
    for (int s : tax.downsample_sizes)
        if (s < 1)
            raise(ErrorCode::InvalidClass, "downsample size must be >= 1");
}

void validate_class(const QualityClass& c, const QualityTaxonomy& tax) {
    switch (c.kind) {
        case QualityKind::G:
            if (c.level != 0)
                raise(ErrorCode::InvalidClass, "class G carries no level");
            break;
        case QualityKind::BJ:
            if (c.level < 1 || c.level > tax.m())
                raise(ErrorCode::InvalidClass,
                      "BJ level " + std::to_string(c.level) + " outside 1.." +
                          std::to_string(tax.m()));
            break;
        case QualityKind::BL:
            if (c.level < 1 || c.level > tax.n())
                raise(ErrorCode::InvalidClass,
                      "BL level " + std::to_string(c.level) + " outside 1.." +
                          std::to_string(tax.n()));
            break;
    }
}

std::vector<QualityClass> enumerate_classes(const QualityTaxonomy& tax) {
    validate_taxonomy(tax);
    std::vector<QualityClass> classes;
    classes.reserve(tax.class_count());
    classes.push_back(QualityClass::good());
    for (int i = 1; i <= tax.m(); ++i) classes.push_back(QualityClass::bj(i));
    for (int j = 1; j <= tax.n(); ++j) classes.push_back(QualityClass::bl(j));
    return classes;
}

int class_index(const QualityClass& c, const QualityTaxonomy& tax) {
    validate_class(c, tax);
    switch (c.kind) {
        case QualityKind::G: return 0;
        case QualityKind::BJ: return c.level;
        case QualityKind::BL: return tax.m() + c.level;
    }
    return -1;
}

QualityClass class_at(int index, const QualityTaxonomy& tax) {
    if (index < 0 || index >= tax.class_count())
        raise(ErrorCode::InvalidClass, "class index out of range");
    if (index == 0) return QualityClass::good();
    if (index <= tax.m()) return QualityClass::bj(index);
    return QualityClass::bl(index - tax.m());
}

std::string kind_name(QualityKind kind) {
    switch (kind) {
        case QualityKind::G: return "G";
        case QualityKind::BJ: return "BJ";
        case QualityKind::BL: return "BL";
    }
    return "?";
}

std::string class_slug(const QualityClass& c) {
    if (c.kind == QualityKind::G) return "G";
    return kind_name(c.kind) + "_" + std::to_string(c.level);
}

QualityClass parse_class(const std::string& text) {
    if (text == "G") return QualityClass::good();
    size_t sep = text.find_first_of(":_");
    if (sep == std::string::npos)
        raise(ErrorCode::InvalidClass, "cannot parse quality class: " + text);
    std::string kind = text.substr(0, sep);
    std::string level_text = text.substr(sep + 1);
    int level = 0;
    auto [ptr, ec] = std::from_chars(level_text.data(),
                                     level_text.data() + level_text.size(), level);
    if (ec != std::errc() || ptr != level_text.data() + level_text.size())
        raise(ErrorCode::InvalidClass, "bad level in quality class: " + text);
    if (kind == "BJ") return QualityClass::bj(level);
    if (kind == "BL") return QualityClass::bl(level);
    raise(ErrorCode::InvalidClass, "unknown quality kind: " + kind);
}

}  // namespace qcia
