/**
 * Cross-checks between the combinatorial predictions and the cohomology
 * oracle on a compactified model pair.
 */
#pragma once

#include <map>
#include <string>
#include <vector>

#include "extraction.hpp"
#include "model.hpp"
#include "oracle.hpp"
#include "sod.hpp"

namespace torsod::verify {

struct OracleRecord {
    std::string check;
    std::string subject;
    std::string expected;
    std::string observed;
    bool holds = false;
};

struct CheckSummary {
    std::string check;
    std::size_t total = 0;
    std::size_t failed = 0;
};

struct OracleReport {
    std::vector<OracleRecord> records;

    void add(std::string check, std::string subject, std::string expected, std::string observed, bool holds)
    {
        records.push_back({std::move(check), std::move(subject), std::move(expected), std::move(observed), holds});
    }
    bool passed() const
    {
        return std::all_of(records.begin(), records.end(), [](const OracleRecord& r) { return r.holds; });
    }
    std::size_t count(const std::string& check) const
    {
        return static_cast<std::size_t>(
            std::count_if(records.begin(), records.end(), [&](const OracleRecord& r) { return r.check == check; }));
    }
    bool passed(const std::string& check) const
    {
        return std::all_of(records.begin(), records.end(), [&](const OracleRecord& r) { return r.check != check || r.holds; });
    }
    /// Per-check totals in order of first appearance.
    std::vector<CheckSummary> summary() const
    {
        std::vector<CheckSummary> out;
        std::map<std::string, std::size_t> pos;
        for (const auto& r : records) {
            auto it = pos.find(r.check);
            if (it == pos.end()) {
                it = pos.emplace(r.check, out.size()).first;
                out.push_back({r.check, 0, 0});
            }
            ++out[it->second].total;
            if (!r.holds) ++out[it->second].failed;
        }
        return out;
    }
    std::vector<OracleRecord> failures() const
    {
        std::vector<OracleRecord> out;
        for (const auto& r : records)
            if (!r.holds) out.push_back(r);
        return out;
    }
    void append(const OracleReport& o) { records.insert(records.end(), o.records.begin(), o.records.end()); }
};

/// All integer vectors in [-B, B]^dim, lexicographic.
inline std::vector<IntVector> box_labels(std::size_t dim, int B)
{
    std::vector<IntVector> out;
    if (B < 0) return out;
    IntVector v(dim, Integer(-B));
    for (;;) {
        out.push_back(v);
        std::size_t i = dim;
        while (i > 0 && v[i - 1] == B) {
            v[i - 1] = -B;
            --i;
        }
        if (i == 0) return out;
        ++v[i - 1];
    }
}

inline std::vector<oracle::Label> oracle_box(std::size_t dim, int B)
{
    std::vector<oracle::Label> out;
    for (const auto& v : box_labels(dim, B)) out.push_back(oracle::to_point(v));
    return out;
}

inline std::string dims_string(const oracle::CohomologyVector& c) { return c.is_zero() ? "0" : c.str(); }

inline std::string unit_string(std::size_t d)
{
    std::vector<std::int64_t> v(d + 1, 0);
    v[0] = 1;
    return oracle::point_string(v);
}

/**
 * Oracle self-tests on one fan: O has cohomology (1,0,...), and for every
 * label in [-B, B]^rays Serre duality, h^0 against the polytope count and
 * the face-count Euler characteristic against the alternating sum.
 */
inline OracleReport oracle_self_test(const oracle::CohomologyOracle& o, const std::string& fan_name, int B)
{
    OracleReport rep;
    const std::size_t d = o.dimension();
    oracle::CohomologyVector zero = o.cohomology(oracle::Label(o.ray_count(), 0));
    std::vector<std::int64_t> unit(d + 1, 0);
    unit[0] = 1;
    rep.add("oracle.structure_sheaf", fan_name, oracle::point_string(unit), zero.str(), zero.dims == unit);
    for (const auto& k : oracle_box(o.ray_count(), B)) {
        std::string subj = fan_name + " k=" + oracle::point_string(k);
        oracle::CohomologyVector h = o.cohomology(k);
        oracle::Label dual(k.size());
        for (std::size_t j = 0; j < k.size(); ++j) dual[j] = -1 - k[j];
        oracle::CohomologyVector hd = o.cohomology(dual);
        std::vector<std::int64_t> rev(hd.dims.rbegin(), hd.dims.rend());
        rep.add("oracle.serre_duality", subj, oracle::point_string(rev), h.str(), h.dims == rev);
        std::int64_t h0 = o.h0_count(k);
        rep.add("oracle.h0_count", subj, std::to_string(h0), std::to_string(h.dims[0]), h0 == h.dims[0]);
        std::int64_t chi = o.euler_characteristic(k);
        rep.add("oracle.euler", subj, std::to_string(chi), std::to_string(h.euler()), chi == h.euler());
    }
    return rep;
}

struct SodOptions {
    int box = 4;
    std::size_t max_depth = 64;
};

/// X labels of the box inside the spanning window.
inline std::vector<IntVector> x_window_labels(const ExtractionDatum& d, int B)
{
    std::vector<IntVector> out;
    for (const auto& k : box_labels(d.n() + 1, B))
        if (in_pushforward_window(d, k)) out.push_back(k);
    return out;
}

/// Y labels of the box whose full-window position is spanning.
inline std::vector<IntVector> y_spanning_labels(const ExtractionDatum& d, int B)
{
    std::vector<IntVector> out;
    for (const auto& k : box_labels(d.n(), B))
        if (window_position(d, k).spanning) out.push_back(k);
    return out;
}

/// Block labels of the box admitting a witness.
inline std::vector<BlockLabel> box_blocks(const ExtractionDatum& d, int B)
{
    std::vector<BlockLabel> out;
    for (const auto& k : box_labels(d.alpha(), B))
        if (block_witness(d, k)) out.push_back(make_block(d, k));
    return out;
}

inline oracle::LineBundleComplex block_object(const ModelPair& m, std::span<const Integer> k)
{
    return oracle::koszul(m.lift_y(detail::extend(k, m.datum.n())), m.face_rays_y());
}

inline bool base_is_point(const ExtractionDatum& d) { return d.alpha() == d.n(); }

/// Ext_X(O(k'), O(k)) = Ext_Y(O(phi k'), O(phi k)) for window labels.
inline void check_fully_faithful(const ModelPair& m, const oracle::CohomologyOracle& X, const oracle::CohomologyOracle& Y,
                                 int B, OracleReport& rep)
{
    const auto labels = x_window_labels(m.datum, B);
    for (const auto& k : labels)
        for (const auto& kp : labels) {
            Pushforward pk = phi_pushforward(m.datum, k), pkp = phi_pushforward(m.datum, kp);
            oracle::CohomologyVector ex = X.ext_groups(m.lift_x(k), m.lift_x(kp));
            oracle::CohomologyVector ey = Y.ext_groups(m.lift_y(pk.label), m.lift_y(pkp.label));
            rep.add("sod.fully_faithful", "k=" + label_key(k) + " k'=" + label_key(kp), ex.str(), ey.str(), ex.dims == ey.dims);
        }
}

/// Ext^*(O(l), O_Z(k)) = 0 for spanning l and block k.
inline void check_image_vs_blocks(const ModelPair& m, const oracle::CohomologyOracle& Y, int B, OracleReport& rep)
{
    const auto spans = y_spanning_labels(m.datum, B);
    const auto blocks = box_blocks(m.datum, B);
    for (const auto& l : spans)
        for (const auto& b : blocks) {
            oracle::CohomologyVector e = Y.ext(oracle::single(m.lift_y(l)), block_object(m, b.k));
            rep.add("sod.image_vs_block", "l=" + label_key(l) + " k=" + label_key(b.k), "0", dims_string(e), e.is_zero());
        }
}

/// Ext^*(O_Z(k), O_Z(k')) = 0 when 0 < w(k') - w(k) < -sigma.
inline void check_block_vs_block(const ModelPair& m, const oracle::CohomologyOracle& Y, int B, OracleReport& rep)
{
    const auto blocks = box_blocks(m.datum, B);
    const Rational sigma = m.datum.sigma();
    for (const auto& b : blocks)
        for (const auto& bp : blocks) {
            Rational gap = bp.w - b.w;
            if (!(gap > 0 && gap < -sigma)) continue;
            oracle::CohomologyVector e = Y.ext(block_object(m, b.k), block_object(m, bp.k));
            rep.add("sod.block_vs_block", "k=" + label_key(b.k) + " k'=" + label_key(bp.k), "0", dims_string(e), e.is_zero());
        }
}

/**
 * Equal-weight block labels: different blocks are orthogonal both ways; for
 * a point base, labels of the same block have Ext equal to End.
 */
inline void check_block_dedup(const ModelPair& m, const oracle::CohomologyOracle& Y, int B, OracleReport& rep)
{
    const auto blocks = box_blocks(m.datum, B);
    for (std::size_t i = 0; i < blocks.size(); ++i)
        for (std::size_t j = 0; j < blocks.size(); ++j) {
            if (i == j || blocks[i].w != blocks[j].w) continue;
            const auto& a = blocks[i];
            const auto& b = blocks[j];
            std::string subj = "k=" + label_key(a.k) + " k'=" + label_key(b.k);
            oracle::CohomologyVector e = Y.ext(block_object(m, a.k), block_object(m, b.k));
            if (!same_block(m.datum, a.k, b.k)) {
                rep.add("sod.dedup_orthogonal", subj, "0", dims_string(e), e.is_zero());
            } else if (base_is_point(m.datum)) {
                oracle::CohomologyVector end = Y.ext(block_object(m, a.k), block_object(m, a.k));
                rep.add("sod.dedup_same_block", subj, end.str(), e.str(), e.same_dims(end));
            }
        }
}

/// End^*(O_Z(k)) = (1) in degree 0 for every block label (point base).
inline void check_exceptional(const ModelPair& m, const oracle::CohomologyOracle& Y, int B, OracleReport& rep)
{
    if (!base_is_point(m.datum)) return;
    for (const auto& b : box_blocks(m.datum, B)) {
        oracle::CohomologyVector e = Y.ext(block_object(m, b.k), block_object(m, b.k));
        rep.add("sod.exceptional", "k=" + label_key(b.k), "(1)", e.str(), e.min_degree == 0 && e.dims == std::vector<std::int64_t>{1});
    }
}

/**
 * H^*(O_Z(k)) vanishes when the exceptional-coefficient test says so, for
 * k in the box and k = -e_I.  With a point base, H^*(O_Z(k)) is (1) exactly
 * when k is trivial in the face class group and 0 otherwise.
 */
inline void check_face_vanishing(const ModelPair& m, const oracle::CohomologyOracle& Y, int B, OracleReport& rep)
{
    const ExtractionDatum& d = m.datum;
    std::vector<IntVector> labels = box_labels(d.alpha(), B);
    for (std::uint64_t I : detail::nonempty_subsets(d.alpha())) labels.push_back(detail::minus_subset(IntVector(d.alpha(), 0), I));
    std::set<IntVector> seen;
    for (const auto& k : labels) {
        if (!seen.insert(k).second) continue;
        bool predicted = face_vanishes(d, detail::extend(k, d.n()));
        oracle::CohomologyVector h = Y.ext(oracle::single(oracle::Label(Y.ray_count(), 0)), block_object(m, k));
        std::string subj = "k=" + label_key(k);
        if (predicted) rep.add("sod.face_vanishing", subj, "0", dims_string(h), h.is_zero());
        if (base_is_point(d)) {
            bool trivial = face_class_group(d).is_trivial_class(k);
            rep.add("sod.face_class_criterion", subj, trivial ? "(1)" : "0", dims_string(h),
                    trivial ? h.min_degree == 0 && h.dims == std::vector<std::int64_t>{1} : h.is_zero());
        }
    }
}

/// Alternating corner sum against the hypercohomology of each Koszul block.
inline CertificateReplay certificate_replay(const ModelPair& m, const oracle::CohomologyOracle& Y)
{
    CertificateReplay r;
    r.line_bundle = [&m, &Y](const IntVector& k) { return Integer(Y.euler_characteristic(m.lift_y(k))); };
    r.block = [&m, &Y](const IntVector& k) {
        return Integer(Y.hypercohomology(oracle::koszul(m.lift_y(k), m.face_rays_y())).euler());
    };
    return r;
}

inline void check_certificate(const ModelPair& m, const oracle::CohomologyOracle& Y, int B, std::size_t max_depth,
                              OracleReport& rep)
{
    GenerationCertificate cert = generation_certificate(m.datum, box_labels(m.datum.n(), B), max_depth);
    CertificateReplay replay = certificate_replay(m, Y);
    CertificateVerdict v = verify_certificate(m.datum, cert, &replay);
    for (const auto& viol : v.violations)
        rep.add("sod.certificate", viol.node, "no violation", std::string(to_string(viol.kind)) + ": " + viol.message, false);
    rep.add("sod.certificate", "box " + std::to_string(B), "accepted with Euler replay",
            std::to_string(cert.nodes.size()) + " nodes, " + std::to_string(v.koszul_nodes_replayed) + " Koszul replays",
            v.ok());
}

/// Number of blocks = rank K_0(Y) - rank K_0(X) for a point base.
inline void check_block_count(const ModelPair& m, const oracle::CohomologyOracle& X, const oracle::CohomologyOracle& Y,
                              OracleReport& rep)
{
    if (!base_is_point(m.datum)) return;
    Integer diff = Y.k0_rank() - X.k0_rank();
    std::size_t blocks = block_labels(m.datum).size();
    rep.add("sod.block_count", m.name, diff.str(), std::to_string(blocks), diff == Integer(blocks));
}

inline OracleReport verify_sod(const ModelPair& m, const oracle::CohomologyOracle& X, const oracle::CohomologyOracle& Y,
                               const SodOptions& opt)
{
    require_extraction(m.datum, "verify_sod");
    OracleReport rep;
    check_fully_faithful(m, X, Y, opt.box, rep);
    check_image_vs_blocks(m, Y, opt.box, rep);
    check_block_vs_block(m, Y, opt.box, rep);
    check_block_dedup(m, Y, opt.box, rep);
    check_exceptional(m, Y, opt.box, rep);
    check_face_vanishing(m, Y, opt.box, rep);
    check_certificate(m, Y, opt.box, opt.max_depth, rep);
    check_block_count(m, X, Y, rep);
    return rep;
}

}  // namespace torsod::verify
