/**
 * Spanning bundles, blocks, vanishing windows and the Koszul generation
 * certificate for an extraction datum.
 *
 * Label conventions: an X label has n+1 entries (exceptional coordinate
 * last), a Y label has n entries and a block label has alpha entries with
 * the remaining Y coordinates pinned to 0.
 */
#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "extraction.hpp"
#include "lattice.hpp"

namespace torsod {

/// Raised when an operation needs an Extraction datum and gets something else.
class PreconditionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

inline void require_extraction(const ExtractionDatum& d, const std::string& op)
{
    BirationalClass c = classify(d);
    if (c.type != BirationalType::Extraction)
        throw PreconditionError(op + " needs an Extraction datum (sigma < 0); got " + to_string(c.type) +
                                " with sigma = " + to_string(c.sigma));
}

/// "[1,-1]"
inline std::string label_key(std::span<const Integer> k)
{
    std::string s = "[";
    for (std::size_t i = 0; i < k.size(); ++i) {
        if (i) s += ",";
        s += k[i].str();
    }
    return s + "]";
}

inline std::string block_key(std::span<const Integer> k) { return "block" + label_key(k); }

namespace detail {

inline void check_length(std::span<const Integer> k, std::size_t expected, const char* op)
{
    if (k.size() != expected)
        throw std::invalid_argument(std::string(op) + ": label has " + std::to_string(k.size()) +
                                    " entries, expected " + std::to_string(expected));
}

/// Rows r_i v_i for i < count.
inline IntMatrix class_matrix(const ExtractionDatum& d, std::size_t count)
{
    std::vector<IntVector> rows;
    for (std::size_t i = 0; i < count; ++i) rows.push_back(d.r(i) * d.ray(i));
    return IntMatrix::from_rows(rows, d.n());
}

/// Sum over i < n of a_i k_i / r_i.
inline Rational partial_weight(const ExtractionDatum& d, std::span<const Integer> k)
{
    Rational s = 0;
    for (std::size_t i = 0; i < d.n(); ++i)
        if (d.a(i) != 0) s += Rational(d.a(i) * k[i], d.r(i));
    return s;
}

inline IntVector extend(std::span<const Integer> k, std::size_t length)
{
    IntVector out(k.begin(), k.end());
    out.resize(length, 0);
    return out;
}

inline IntVector with_last(std::span<const Integer> k, const Integer& last)
{
    IntVector out(k.begin(), k.end());
    out.push_back(last);
    return out;
}

inline std::vector<std::uint64_t> nonempty_subsets(std::size_t alpha)
{
    if (alpha > 20) throw std::invalid_argument("alpha too large for subset enumeration");
    std::vector<std::uint64_t> out;
    for (std::uint64_t s = 1; s < (std::uint64_t{1} << alpha); ++s) out.push_back(s);
    return out;
}

inline IntVector minus_subset(std::span<const Integer> k, std::uint64_t subset)
{
    IntVector out(k.begin(), k.end());
    for (std::size_t i = 0; i < out.size() && i < 64; ++i)
        if (subset >> i & 1) out[i] -= 1;
    return out;
}

inline std::string subset_string(std::uint64_t subset)
{
    std::string s = "{";
    bool first = true;
    for (std::size_t i = 0; i < 64; ++i)
        if (subset >> i & 1) {
            if (!first) s += ",";
            s += std::to_string(i + 1);
            first = false;
        }
    return s + "}";
}

}  // namespace detail

/// Class group of the X-side local model: Z^{n+1} modulo rows r_i v_i.
inline AbelianGroupDesc x_class_group(const ExtractionDatum& d) { return cokernel(detail::class_matrix(d, d.n() + 1)); }

/// Class group of the Y-side local model (finite).
inline AbelianGroupDesc y_class_group(const ExtractionDatum& d) { return cokernel(detail::class_matrix(d, d.n())); }

/// Z^alpha modulo the Y-side class lattice restricted to indices below alpha.
inline AbelianGroupDesc face_class_group(const ExtractionDatum& d) { return cokernel(detail::class_matrix(d, d.alpha())); }

/// 0 <= -w(k) < sigma_alpha
inline bool in_pushforward_window(const ExtractionDatum& d, std::span<const Integer> k)
{
    detail::check_length(k, d.n() + 1, "in_pushforward_window");
    Rational mw = -weighted_sum(d, k);
    return mw >= 0 && mw < d.sigma_alpha();
}

struct SpanningClass {
    IntVector representative;  ///< canonical X-side representative, n+1 entries
    Rational weight;           ///< w(representative)
};

/**
 * One canonical representative per X-side class admitting a pushforward window
 * member.  Ordered by -w, then lexicographically.
 */
inline std::vector<SpanningClass> spanning_classes(const ExtractionDatum& d)
{
    AbelianGroupDesc G = x_class_group(d);
    if (G.free_rank() != 1) throw std::logic_error("X class group should have free rank 1");
    const std::size_t s = G.invariant_factors().size();

    IntVector unit(s + 1, 0);
    unit[s] = 1;
    const Rational c = weighted_sum(d, G.from_coordinates(unit)) - weighted_sum(d, G.from_coordinates(IntVector(s + 1, 0)));
    if (c == 0) throw std::logic_error("weighted sum vanishes on the free part of the class group");
    const Rational lo = -d.sigma_alpha();

    std::vector<SpanningClass> out;
    for (IntVector t : G.torsion_tuples()) {
        t.push_back(0);
        const Rational wt = weighted_sum(d, G.from_coordinates(t));
        // wt + c f in (lo, 0]
        Integer first, last;
        if (c > 0) {
            first = floor(Rational((lo - wt) / c)) + 1;
            last = floor(Rational(-wt / c));
        } else {
            first = ceil(Rational(-wt / c));
            last = ceil(Rational((lo - wt) / c)) - 1;
        }
        for (Integer f = first; f <= last; ++f) {
            t.back() = f;
            IntVector rep = G.from_coordinates(t);
            out.push_back({rep, weighted_sum(d, rep)});
        }
    }
    std::sort(out.begin(), out.end(), [](const SpanningClass& a, const SpanningClass& b) {
        if (a.weight != b.weight) return a.weight > b.weight;
        return a.representative < b.representative;
    });
    return out;
}

struct Pushforward {
    IntVector label;              ///< first n entries
    bool higher_vanishing;        ///< R^q vanishing condition for q > 0
    bool sheaf_formula_applies;   ///< pushforward is O(sum k_i E_i)
};

inline Pushforward phi_pushforward(const ExtractionDatum& d, std::span<const Integer> k)
{
    detail::check_length(k, d.n() + 1, "phi_pushforward");
    const std::size_t n = d.n();
    const Rational scale = Rational(d.r(n)) / d.a(n);
    const Rational lhs = scale * weighted_sum(d, k);
    Rational rest = 0;
    for (std::size_t i = 0; i < n; ++i) rest += d.ratio(i);
    return {IntVector(k.begin(), k.begin() + static_cast<std::ptrdiff_t>(n)), lhs < -scale * rest, lhs >= 0};
}

/// k_{n+1} solving sum_{i<=n+1} a_i k_i / r_i = 0 for a Y label k.
inline Rational vanishing_coefficient(const ExtractionDatum& d, std::span<const Integer> k)
{
    detail::check_length(k, d.n(), "vanishing_coefficient");
    const std::size_t n = d.n();
    return -(Rational(d.r(n)) / d.a(n)) * detail::partial_weight(d, k);
}

/// True when the solved k_{n+1} is not an integer divisible by r_{n+1}.
inline bool face_vanishes(const ExtractionDatum& d, std::span<const Integer> k)
{
    Rational c = vanishing_coefficient(d, k);
    if (!is_integer(c)) return true;
    return boost::multiprecision::numerator(c) % d.r(d.n()) != 0;
}

/// One exact check: lower < value < upper (each side strict or not, optional).
struct CheckRecord {
    std::string check;
    std::string subject;
    Rational value = 0;
    std::optional<Rational> lower;
    std::optional<Rational> upper;
    bool lower_strict = true;
    bool upper_strict = true;
    bool holds = false;
    std::string note;
};

namespace detail {

inline CheckRecord interval_record(std::string check, std::string subject, const Rational& value,
                                   std::optional<Rational> lower, bool lower_strict, std::optional<Rational> upper,
                                   bool upper_strict)
{
    CheckRecord r{std::move(check), std::move(subject), value, lower, upper, lower_strict, upper_strict, true, {}};
    if (lower) r.holds = r.holds && (lower_strict ? *lower < value : *lower <= value);
    if (upper) r.holds = r.holds && (upper_strict ? value < *upper : value <= *upper);
    return r;
}

inline CheckRecord flag_record(std::string check, std::string subject, bool holds, std::string note = {})
{
    CheckRecord r;
    r.check = std::move(check);
    r.subject = std::move(subject);
    r.value = holds ? 1 : 0;
    r.holds = holds;
    r.note = std::move(note);
    return r;
}

}  // namespace detail

struct CheckReport {
    std::vector<CheckRecord> records;

    bool passed() const
    {
        return std::all_of(records.begin(), records.end(), [](const CheckRecord& r) { return r.holds; });
    }
    std::vector<CheckRecord> failures() const
    {
        std::vector<CheckRecord> out;
        for (const auto& r : records)
            if (!r.holds) out.push_back(r);
        return out;
    }
};

/**
 * Exactness of the Koszul complex on O(-D_i), i < alpha: no cone of the
 * local star subdivision contains all of v_0..v_{alpha-1}, and v_n lies in
 * the relative interior of their cone.
 */
inline CheckRecord koszul_intersection_empty(const ExtractionDatum& d)
{
    const std::size_t n = d.n(), alpha = d.alpha();
    std::vector<IntVector> basis(d.rays().begin(), d.rays().begin() + static_cast<std::ptrdiff_t>(n));
    auto lambda = solve_rational(IntMatrix::from_rows(basis).transpose(), std::span<const Integer>(d.ray(n)));
    bool interior = lambda.has_value();
    if (interior)
        for (std::size_t i = 0; i < n; ++i) interior = interior && (i < alpha ? (*lambda)[i] > 0 : (*lambda)[i] == 0);

    // Maximal cones of the subdivision: replace v_j (j < alpha) by v_n.
    bool empty = true;
    for (std::size_t j = 0; j < alpha; ++j) {
        std::set<std::size_t> cone;
        for (std::size_t i = 0; i < n; ++i)
            if (i != j) cone.insert(i);
        cone.insert(n);
        bool contains_all = true;
        for (std::size_t i = 0; i < alpha; ++i) contains_all = contains_all && cone.count(i);
        empty = empty && !contains_all;
    }
    return detail::flag_record("koszul.intersection_empty", "D_1..D_alpha on X", interior && empty,
                               interior ? "" : "exceptional ray is not interior to the face cone");
}

/**
 * Window chain on all ordered pairs of spanning classes, and the
 * subset sums that make each Koszul homology term vanish.
 */
inline CheckReport fully_faithful_check(const ExtractionDatum& d)
{
    require_extraction(d, "fully_faithful_check");
    const std::size_t n = d.n();
    const Rational step = d.ratio(n);  // a_{n+1}/r_{n+1} < 0
    const Rational sig_n = d.sigma_alpha();
    CheckReport rep;

    rep.records.push_back(detail::interval_record("ff.chain_lower", "a_{n+1}/r_{n+1} < -sum_{i<=n} a_i/r_i", step,
                                                  std::nullopt, true, -sig_n, true));
    auto spans = spanning_classes(d);
    for (const auto& k : spans)
        for (const auto& kp : spans) {
            IntVector diff = k.representative - kp.representative;
            rep.records.push_back(detail::interval_record(
                "ff.difference", "k=" + label_key(k.representative) + " k'=" + label_key(kp.representative),
                -weighted_sum(d, diff), step, true, sig_n, true));
        }
    for (std::uint64_t I : detail::nonempty_subsets(d.alpha())) {
        Rational s = 0;
        for (std::size_t i = 0; i < d.alpha(); ++i)
            if (I >> i & 1) s += d.ratio(i);
        rep.records.push_back(
            detail::interval_record("ff.koszul_subset", "I=" + detail::subset_string(I), s, Rational(0), true, -step, true));
        IntVector e = detail::minus_subset(IntVector(n, 0), I);
        rep.records.push_back(detail::flag_record("ff.koszul_vanishing", "I=" + detail::subset_string(I),
                                                  face_vanishes(d, e)));
    }
    rep.records.push_back(koszul_intersection_empty(d));
    return rep;
}

struct BlockLabel {
    IntVector k;       ///< alpha entries
    Integer witness;   ///< k_{n+1}
    Rational w;        ///< weighted sum with the witness, in (0, -sigma]
};

/// Y label padded from a block label plus its witness: n+1 entries.
inline IntVector block_full_label(const ExtractionDatum& d, const BlockLabel& b)
{
    return detail::with_last(detail::extend(b.k, d.n()), b.witness);
}

/// The integer k_{n+1} with 0 < w <= -sigma, if any.  Accepts alpha or n entries.
inline std::optional<Integer> block_witness(const ExtractionDatum& d, std::span<const Integer> k)
{
    if (k.size() != d.alpha() && k.size() != d.n())
        throw std::invalid_argument("block_witness: label must have alpha or n entries");
    const std::size_t n = d.n();
    const Rational S = detail::partial_weight(d, detail::extend(k, n));
    const Rational c = d.exceptional_step();
    const Rational sigma = d.sigma();
    if (sigma >= 0) return std::nullopt;
    Integer kl = ceil(Rational((S + sigma) / c));
    Rational w = S - c * Rational(kl);
    if (w > 0 && w <= -sigma) return kl;
    return std::nullopt;
}

/// Position of a Y label in the full window (-sigma_alpha, -sigma].
struct WindowPosition {
    Integer k_last;
    Rational w;
    bool spanning;  ///< w <= 0, pushforward image; otherwise a block window member
};

inline WindowPosition window_position(const ExtractionDatum& d, std::span<const Integer> k)
{
    detail::check_length(k, d.n(), "window_position");
    const Rational S = detail::partial_weight(d, k);
    const Rational c = d.exceptional_step();
    Integer kl = ceil(Rational((S + d.sigma()) / c));
    Rational w = S - c * Rational(kl);
    return {kl, w, w <= 0};
}

/// Block classes: Z^alpha modulo the face lattice, those admitting a witness.
inline std::vector<BlockLabel> block_labels(const ExtractionDatum& d)
{
    require_extraction(d, "block_labels");
    AbelianGroupDesc G = face_class_group(d);
    if (G.free_rank() != 0) throw std::logic_error("face class group should be finite");
    std::vector<BlockLabel> out;
    for (const IntVector& t : G.torsion_tuples()) {
        IntVector k = G.from_coordinates(t);
        if (auto wit = block_witness(d, k)) {
            Rational w = weighted_sum(d, detail::with_last(detail::extend(k, d.n()), *wit));
            out.push_back({k, *wit, w});
        }
    }
    std::sort(out.begin(), out.end(), [](const BlockLabel& a, const BlockLabel& b) {
        if (a.w != b.w) return a.w < b.w;
        return a.k < b.k;
    });
    return out;
}

inline BlockLabel make_block(const ExtractionDatum& d, std::span<const Integer> k)
{
    detail::check_length(k, d.alpha(), "make_block");
    auto wit = block_witness(d, k);
    if (!wit) throw std::invalid_argument("label " + label_key(k) + " admits no block witness");
    IntVector kk(k.begin(), k.end());
    return {kk, *wit, weighted_sum(d, detail::with_last(detail::extend(k, d.n()), *wit))};
}

/// The restriction of O(sum (k_i - k'_i) E_i) to F pushes forward to an invertible sheaf.
inline bool same_block(const ExtractionDatum& d, std::span<const Integer> k, std::span<const Integer> kp)
{
    detail::check_length(k, d.alpha(), "same_block");
    detail::check_length(kp, d.alpha(), "same_block");
    return face_class_group(d).same_class(k, kp);
}

struct BlockPair {
    std::size_t first;
    std::size_t second;
    bool same_block;
    bool face_vanishes_on_difference;
};

/// Equal-weight pairs among the given blocks and whether they coincide.
inline std::vector<BlockPair> block_dedup(const ExtractionDatum& d, const std::vector<BlockLabel>& blocks)
{
    std::vector<BlockPair> out;
    for (std::size_t i = 0; i < blocks.size(); ++i)
        for (std::size_t j = i + 1; j < blocks.size(); ++j) {
            if (blocks[i].w != blocks[j].w) continue;
            IntVector diff = detail::extend(blocks[i].k - blocks[j].k, d.n());
            out.push_back({i, j, same_block(d, blocks[i].k, blocks[j].k), face_vanishes(d, diff)});
        }
    return out;
}

/**
 * (a) pushforward images against blocks and (b) blocks against blocks over
 * every epsilon pattern, each with the matching face vanishing.
 */
inline CheckReport semiorthogonality_check(const ExtractionDatum& d, const std::vector<IntVector>& spanning,
                                           const std::vector<BlockLabel>& blocks)
{
    require_extraction(d, "semiorthogonality_check");
    const std::size_t n = d.n();
    const Rational step = d.ratio(n);
    const Rational sigma = d.sigma();
    CheckReport rep;

    for (const IntVector& l : spanning) {
        detail::check_length(l, n + 1, "semiorthogonality_check");
        for (const BlockLabel& b : blocks) {
            IntVector diff = l - block_full_label(d, b);
            std::string subj = "l=" + label_key(l) + " k=" + label_key(b.k) + " k_last=" + b.witness.str();
            rep.records.push_back(
                detail::interval_record("so.image_vs_block", subj, -weighted_sum(d, diff), Rational(0), true, -step, true));
            IntVector face = detail::extend(IntVector(diff.begin(), diff.begin() + static_cast<std::ptrdiff_t>(d.alpha())), n);
            rep.records.push_back(detail::flag_record("so.image_vs_block_vanishing", subj, face_vanishes(d, face)));
        }
    }

    for (const BlockLabel& b : blocks)
        for (const BlockLabel& bp : blocks) {
            Rational gap = bp.w - b.w;
            if (!(gap > 0 && gap < -sigma)) continue;
            IntVector base = block_full_label(d, b) - block_full_label(d, bp);
            for (std::uint64_t I = 0; I < (std::uint64_t{1} << d.alpha()); ++I) {
                IntVector diff = detail::minus_subset(base, I);
                std::string subj = "k=" + label_key(b.k) + " k'=" + label_key(bp.k) + " eps=" + detail::subset_string(I);
                rep.records.push_back(
                    detail::interval_record("so.block_vs_block", subj, weighted_sum(d, diff), step, true, Rational(0), true));
                IntVector face = detail::extend(IntVector(diff.begin(), diff.begin() + static_cast<std::ptrdiff_t>(d.alpha())), n);
                rep.records.push_back(detail::flag_record("so.block_vs_block_vanishing", subj, face_vanishes(d, face)));
            }
        }
    return rep;
}

inline CheckReport semiorthogonality_check(const ExtractionDatum& d)
{
    std::vector<IntVector> spanning;
    for (const auto& s : spanning_classes(d)) spanning.push_back(s.representative);
    return semiorthogonality_check(d, spanning, block_labels(d));
}

enum class NodeKind { LeafSpan, LeafBlock, Koszul };

inline const char* to_string(NodeKind k)
{
    switch (k) {
        case NodeKind::LeafSpan: return "LEAF-SPAN";
        case NodeKind::LeafBlock: return "LEAF-BLOCK";
        case NodeKind::Koszul: return "KOSZUL";
    }
    return "?";
}

struct CertificateNode {
    std::string key;
    NodeKind kind = NodeKind::LeafSpan;
    IntVector k;       ///< Y label, n entries
    Integer k_last;    ///< k_{n+1}
    Rational w;
    std::vector<std::string> children;
};

struct GenerationCertificate {
    std::vector<IntVector> targets;
    std::vector<std::string> roots;
    std::map<std::string, CertificateNode> nodes;
};

class CertificateDepthError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/**
 * Derivation of each target from pushforward images and block members.  A
 * label with w in (0, -sigma] becomes a KOSZUL node over its 2^alpha - 1
 * corners and its block leaf.
 */
inline GenerationCertificate generation_certificate(const ExtractionDatum& d, const std::vector<IntVector>& targets,
                                                    std::size_t max_depth = 64)
{
    require_extraction(d, "generation_certificate");
    const std::size_t n = d.n();
    GenerationCertificate cert;
    cert.targets = targets;

    std::function<std::string(const IntVector&, std::size_t)> build = [&](const IntVector& k, std::size_t depth) {
        std::string key = label_key(k);
        if (cert.nodes.count(key)) return key;
        if (depth > max_depth)
            throw CertificateDepthError("generation_certificate exceeded depth " + std::to_string(max_depth) + " at " + key);
        WindowPosition pos = window_position(d, k);
        CertificateNode node{key, NodeKind::LeafSpan, k, pos.k_last, pos.w, {}};
        if (!pos.spanning) {
            node.kind = NodeKind::Koszul;
            for (std::uint64_t I : detail::nonempty_subsets(d.alpha())) {
                IntVector l = detail::minus_subset(k, I);
                std::string ck = build(l, depth + 1);
                if (cert.nodes.at(ck).k_last != pos.k_last)
                    throw std::logic_error("corner " + ck + " left the window of " + key);
                node.children.push_back(ck);
            }
            std::string bk = block_key(k);
            cert.nodes[bk] = CertificateNode{bk, NodeKind::LeafBlock, k, pos.k_last, pos.w, {}};
            node.children.push_back(bk);
        }
        cert.nodes[key] = std::move(node);
        return key;
    };

    for (const IntVector& t : targets) {
        detail::check_length(t, n, "generation_certificate");
        cert.roots.push_back(build(t, 0));
    }
    return cert;
}

enum class ViolationKind { Cycle, MeasureViolation, LeafViolation, WindowViolation, CornerViolation, UnreachableTarget,
                           MalformedNode, EulerMismatch };

inline const char* to_string(ViolationKind k)
{
    switch (k) {
        case ViolationKind::Cycle: return "Cycle";
        case ViolationKind::MeasureViolation: return "MeasureViolation";
        case ViolationKind::LeafViolation: return "LeafViolation";
        case ViolationKind::WindowViolation: return "WindowViolation";
        case ViolationKind::CornerViolation: return "CornerViolation";
        case ViolationKind::UnreachableTarget: return "UnreachableTarget";
        case ViolationKind::MalformedNode: return "MalformedNode";
        case ViolationKind::EulerMismatch: return "EulerMismatch";
    }
    return "?";
}

struct Violation {
    ViolationKind kind;
    std::string node;
    std::string message;
};

struct CertificateVerdict {
    std::vector<Violation> violations;
    std::size_t koszul_nodes_replayed = 0;

    bool ok() const { return violations.empty(); }
    bool has(ViolationKind k) const
    {
        return std::any_of(violations.begin(), violations.end(), [k](const Violation& v) { return v.kind == k; });
    }
};

/// Euler characteristics on a compact model, indexed by datum Y labels.
struct CertificateReplay {
    std::function<Integer(const IntVector&)> line_bundle;  ///< chi(O(k))
    std::function<Integer(const IntVector&)> block;        ///< chi of the block generator at k
};

inline CertificateVerdict verify_certificate(const ExtractionDatum& d, const GenerationCertificate& cert,
                                             const CertificateReplay* replay = nullptr)
{
    const std::size_t n = d.n();
    const Rational sa = d.sigma_alpha(), sigma = d.sigma();
    CertificateVerdict v;
    auto add = [&](ViolationKind k, const std::string& node, const std::string& msg) { v.violations.push_back({k, node, msg}); };
    auto sum = [](const IntVector& k) {
        Integer s = 0;
        for (const auto& x : k) s += x;
        return s;
    };

    for (const auto& [key, node] : cert.nodes) {
        if (node.k.size() != n) {
            add(ViolationKind::MalformedNode, key, "label length");
            continue;
        }
        std::string expect = node.kind == NodeKind::LeafBlock ? block_key(node.k) : label_key(node.k);
        if (key != expect || node.key != key) add(ViolationKind::MalformedNode, key, "key does not match label " + expect);
        Rational w = weighted_sum(d, detail::with_last(node.k, node.k_last));
        if (w != node.w) add(ViolationKind::MalformedNode, key, "stored weight " + to_string(node.w) + " != " + to_string(w));
        const bool in_span = w > -sa && w <= 0;
        const bool in_block = w > 0 && w <= -sigma;
        switch (node.kind) {
            case NodeKind::LeafSpan:
                if (!in_span) add(ViolationKind::LeafViolation, key, "w = " + to_string(w) + " outside (-sigma_alpha, 0]");
                if (!node.children.empty()) add(ViolationKind::MalformedNode, key, "leaf with children");
                break;
            case NodeKind::LeafBlock:
                if (!in_block) add(ViolationKind::LeafViolation, key, "w = " + to_string(w) + " outside (0, -sigma]");
                if (!node.children.empty()) add(ViolationKind::MalformedNode, key, "leaf with children");
                break;
            case NodeKind::Koszul: {
                if (!in_block) add(ViolationKind::WindowViolation, key, "w = " + to_string(w) + " outside (0, -sigma]");
                std::set<std::string> expected{block_key(node.k)};
                for (std::uint64_t I : detail::nonempty_subsets(d.alpha()))
                    expected.insert(label_key(detail::minus_subset(node.k, I)));
                std::set<std::string> actual(node.children.begin(), node.children.end());
                if (actual != expected || actual.size() != node.children.size())
                    add(ViolationKind::CornerViolation, key, "children differ from the corner set");
                for (const auto& ck : node.children) {
                    auto it = cert.nodes.find(ck);
                    if (it == cert.nodes.end()) {
                        add(ViolationKind::MalformedNode, key, "missing child " + ck);
                        continue;
                    }
                    const CertificateNode& c = it->second;
                    if (c.kind == NodeKind::LeafBlock) {
                        if (c.k != node.k || c.k_last != node.k_last)
                            add(ViolationKind::CornerViolation, key, "block leaf " + ck + " does not match");
                        continue;
                    }
                    if (c.k_last != node.k_last) add(ViolationKind::CornerViolation, key, "child " + ck + " changes k_{n+1}");
                    if (c.k.size() == n && !(sum(c.k) < sum(node.k)))
                        add(ViolationKind::MeasureViolation, key, "child " + ck + " does not decrease the label sum");
                }
                if (replay) {
                    Integer lhs = 0;
                    for (std::uint64_t I = 0; I < (std::uint64_t{1} << d.alpha()); ++I) {
                        Integer chi = replay->line_bundle(detail::minus_subset(node.k, I));
                        lhs += (std::popcount(I) % 2 ? -chi : chi);
                    }
                    Integer rhs = replay->block(node.k);
                    if (lhs != rhs)
                        add(ViolationKind::EulerMismatch, key, "Koszul alternating sum " + lhs.str() + " != " + rhs.str());
                    ++v.koszul_nodes_replayed;
                }
                break;
            }
        }
    }

    // Cycle detection over child edges.
    std::map<std::string, int> state;
    std::function<void(const std::string&)> dfs = [&](const std::string& key) {
        state[key] = 1;
        auto it = cert.nodes.find(key);
        if (it != cert.nodes.end())
            for (const auto& c : it->second.children) {
                if (state[c] == 1) add(ViolationKind::Cycle, key, "edge to " + c + " closes a cycle");
                else if (state[c] == 0) dfs(c);
            }
        state[key] = 2;
    };
    for (const auto& [key, node] : cert.nodes)
        if (state[key] == 0) dfs(key);

    if (cert.roots.size() != cert.targets.size()) add(ViolationKind::UnreachableTarget, "", "roots and targets differ in length");
    for (std::size_t i = 0; i < std::min(cert.roots.size(), cert.targets.size()); ++i) {
        auto it = cert.nodes.find(cert.roots[i]);
        if (it == cert.nodes.end() || it->second.k != cert.targets[i] || it->second.kind == NodeKind::LeafBlock)
            add(ViolationKind::UnreachableTarget, cert.roots[i], "target " + label_key(cert.targets[i]) + " has no root node");
    }
    return v;
}

}  // namespace torsod
