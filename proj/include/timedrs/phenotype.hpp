#pragma once
// The 14 cell phenotypes and the full marker-expression table that defines
// them. A phenotype matches only when the nucleus positivity pattern equals
// the expression exactly (markers absent from the abbreviation are negative);
// anything else is Unclassified.

#include <array>
#include <cstdint>

#include "timedrs/common.hpp"

namespace timedrs {

enum class Marker : int { CK = 0, PD1, PDL1, CD8, CD4, CD45RO, FOXP3 };

inline const char* marker_name(Marker m) {
    switch (m) {
        case Marker::CK: return "CK";
        case Marker::PD1: return "PD1";
        case Marker::PDL1: return "PDL1";
        case Marker::CD8: return "CD8";
        case Marker::CD4: return "CD4";
        case Marker::CD45RO: return "CD45RO";
        case Marker::FOXP3: return "FOXP3";
    }
    return "?";
}

// Marker order within a panel; positivity flags follow this order.
inline constexpr std::array<Marker, 4> kPanel1Markers{Marker::CK, Marker::PD1, Marker::PDL1,
                                                      Marker::CD8};
inline constexpr std::array<Marker, 4> kPanel2Markers{Marker::CD4, Marker::CD8, Marker::CD45RO,
                                                      Marker::FOXP3};

inline constexpr std::array<Marker, 4> panel_markers(Panel p) {
    return p == Panel::P1 ? kPanel1Markers : kPanel2Markers;
}

// Positivity for one nucleus, in panel marker order.
struct MarkerFlags {
    std::array<bool, 4> flags{};
    bool operator==(const MarkerFlags&) const = default;
};

enum class Phenotype : int {
    CkPos = 0,
    CkPdl1Pos,
    Pdl1Pos,
    Cd8Pos,
    Pd1Pos,
    Cd8Pd1Pos,
    Cd4Pos,
    Cd45roPos,
    Foxp3Pos,
    Cd4Foxp3Pos,
    Cd8Foxp3Pos,
    Cd4Cd45roPos,
    Cd8Cd45roPos,
    Foxp3Cd45roPos,
    Unclassified,
};

inline constexpr int kNumPhenotypes = 14;

inline constexpr std::array<const char*, 15> kPhenotypeNames{
    "CK+",         "CK+PDL1+",    "PDL1+",        "CD8+",        "PD1+",
    "CD8+PD1+",    "CD4+",        "CD45RO+",      "FOXP3+",      "CD4+FOXP3+",
    "CD8+FOXP3+",  "CD4+CD45RO+", "CD8+CD45RO+",  "FOXP3+CD45RO+", "Unclassified"};

inline const char* phenotype_name(Phenotype p) {
    return kPhenotypeNames[static_cast<std::size_t>(p)];
}

struct PhenotypeExpression {
    Panel panel;
    Phenotype phenotype;
    MarkerFlags expression;
};

// Panel 1 flags: {CK, PD1, PDL1, CD8}; Panel 2 flags: {CD4, CD8, CD45RO, FOXP3}.
inline constexpr std::array<PhenotypeExpression, kNumPhenotypes> kExpressionTable{{
    {Panel::P1, Phenotype::CkPos, {{true, false, false, false}}},
    {Panel::P1, Phenotype::CkPdl1Pos, {{true, false, true, false}}},
    {Panel::P1, Phenotype::Pdl1Pos, {{false, false, true, false}}},
    {Panel::P1, Phenotype::Cd8Pos, {{false, false, false, true}}},
    {Panel::P1, Phenotype::Pd1Pos, {{false, true, false, false}}},
    {Panel::P1, Phenotype::Cd8Pd1Pos, {{false, true, false, true}}},
    {Panel::P2, Phenotype::Cd4Pos, {{true, false, false, false}}},
    {Panel::P2, Phenotype::Cd45roPos, {{false, false, true, false}}},
    {Panel::P2, Phenotype::Foxp3Pos, {{false, false, false, true}}},
    {Panel::P2, Phenotype::Cd4Foxp3Pos, {{true, false, false, true}}},
    {Panel::P2, Phenotype::Cd8Foxp3Pos, {{false, true, false, true}}},
    {Panel::P2, Phenotype::Cd4Cd45roPos, {{true, false, true, false}}},
    {Panel::P2, Phenotype::Cd8Cd45roPos, {{false, true, true, false}}},
    {Panel::P2, Phenotype::Foxp3Cd45roPos, {{false, false, true, true}}},
}};

inline Phenotype assign_phenotype(Panel panel, const MarkerFlags& positivity) {
    for (const auto& row : kExpressionTable) {
        if (row.panel == panel && row.expression == positivity) return row.phenotype;
    }
    return Phenotype::Unclassified;
}

// Tumour-cell phenotypes are counted inside the tumour mask proper rather
// than the dilated vicinity.
inline constexpr bool is_tumour_cell(Phenotype p) {
    return p == Phenotype::CkPos || p == Phenotype::CkPdl1Pos;
}

} // namespace timedrs
