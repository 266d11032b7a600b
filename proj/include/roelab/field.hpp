#pragma once

// Sections t -> b_S(t) of the field over T = {1..n_max} and infinity, with
// finitely supported ideal perturbations, norm profiles and the desk-scale
// field axioms.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "roelab/roe.hpp"

namespace roelab {

struct FieldSection {
    /// Fiber at infinity.
    GridOperator source;
    /// fibers[n-1] = beta^{D_n}(S) + a_n.
    std::vector<Matrix> fibers;
    std::vector<double> fiber_norms;
    double source_norm = 0.0;
    /// Finitely supported element of J, keyed by n (1-based).
    std::map<std::size_t, Matrix> ideal;
};

inline FieldSection section(const GridOperator& S, std::span<const Stage> seq)
{
    FieldSection sec{S, {}, {}, S.norm(), {}};
    for (const auto& st : seq) {
        sec.fibers.push_back(beta(st.iso, S).M);
        sec.fiber_norms.push_back(operator_norm(sec.fibers.back()));
    }
    return sec;
}

/// Adds a_n to fiber n.
inline FieldSection add_ideal(FieldSection sec, std::size_t n, const Matrix& a)
{
    if (n == 0 || n > sec.fibers.size()) throw Error("ideal element outside the schedule");
    auto& fiber = sec.fibers[n - 1];
    if (a.rows() != fiber.rows() || a.cols() != fiber.cols()) throw Error("ideal element has the wrong size");
    fiber += a;
    sec.fiber_norms[n - 1] = operator_norm(fiber);
    auto [it, inserted] = sec.ideal.try_emplace(n, a);
    if (!inserted) it->second += a;
    return sec;
}

struct ProfileRow {
    /// 0 stands for t = infinity.
    std::size_t t = 0;
    double fiber_norm = 0.0;
    double continuity_gap = 0.0;
};

struct NormProfile {
    std::vector<ProfileRow> rows;
    /// Fibers without an ideal part have norm <= ||S|| + 1e-9.
    bool contraction_ok = true;
    double finest_gap = 0.0;
    bool finest_gap_ok = true;
    /// Pure ideal sections only: zero norms beyond the support.
    std::optional<bool> tail_zero;
};

/// ||pi_t(a)|| and |  ||pi_t(a)|| - ||pi_inf(a)|| |, with the finest gap
/// checked against rel_tol * ||S||.
inline NormProfile norm_profile(const FieldSection& sec, double rel_tol = 0.05)
{
    NormProfile p;
    for (std::size_t n = 1; n <= sec.fibers.size(); ++n) {
        const double v = sec.fiber_norms[n - 1];
        p.rows.push_back({n, v, std::fabs(v - sec.source_norm)});
        if (!sec.ideal.contains(n) && v > sec.source_norm + 1e-9) p.contraction_ok = false;
    }
    p.rows.push_back({0, sec.source_norm, 0.0});
    if (!sec.fibers.empty()) {
        p.finest_gap = p.rows[sec.fibers.size() - 1].continuity_gap;
        p.finest_gap_ok = p.finest_gap < rel_tol * sec.source_norm || p.finest_gap == 0.0;
    }
    if (sec.source_norm == 0.0) {
        const std::size_t last = sec.ideal.empty() ? 0 : sec.ideal.rbegin()->first;
        bool zero = true;
        for (std::size_t n = last + 1; n <= sec.fibers.size(); ++n)
            if (sec.fiber_norms[n - 1] > 1e-12) zero = false;
        p.tail_zero = zero;
    }
    return p;
}

struct SectionPair {
    std::size_t first = 0;
    std::size_t second = 0;
    /// Largest fiberwise difference norm, infinity fiber included.
    double max_difference = 0.0;
    std::size_t where = 0;
    bool equal = false;
};

struct FieldAxioms {
    std::vector<SectionPair> pairs;
    /// Distinct sources give distinct sections.
    bool faithful = true;
    /// ||(b_R b_S)_n - (b_RS)_n|| for the first two sections.
    std::vector<ValueRow> product_defect;
    bool product_decreasing_tail = true;
};

inline FieldAxioms field_axioms_check(std::span<const FieldSection> sections, std::span<const Stage> seq,
                                      double tol = 1e-9)
{
    if (sections.size() < 2) throw Error("field axioms need at least two sections");
    FieldAxioms out;
    for (std::size_t i = 0; i < sections.size(); ++i)
        for (std::size_t j = i + 1; j < sections.size(); ++j) {
            const auto& a = sections[i];
            const auto& b = sections[j];
            SectionPair pr{i, j, operator_norm(a.source.M - b.source.M), 0, false};
            for (std::size_t n = 0; n < std::min(a.fibers.size(), b.fibers.size()); ++n) {
                const double d = operator_norm(a.fibers[n] - b.fibers[n]);
                if (d > pr.max_difference) {
                    pr.max_difference = d;
                    pr.where = n + 1;
                }
            }
            pr.equal = pr.max_difference <= tol;
            bool identical = a.source.M == b.source.M && a.ideal.size() == b.ideal.size();
            for (const auto& [n, m] : a.ideal)
                identical = identical && b.ideal.contains(n) && b.ideal.at(n) == m;
            if (pr.equal && !identical) out.faithful = false;
            out.pairs.push_back(pr);
        }
    out.product_defect = multiplicativity_defect(seq, sections[0].source, sections[1].source);
    // The defect table should shrink over the second half of the schedule.
    const auto& d = out.product_defect;
    for (std::size_t n = d.size() / 2 + 1; n < d.size(); ++n)
        if (d[n].value > d[n - 1].value + 1e-12) out.product_decreasing_tail = false;
    return out;
}

} // namespace roelab
