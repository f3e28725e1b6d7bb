/**
 * Brute-force line-bundle cohomology on complete simplicial stacky fans.
 *
 * A label k assigns a coefficient to every ray; the graded piece of
 * O(sum k_j D_j) at a weight m is governed by the set of violated rays
 * S(m) = { j : r_j <m, v_j> + k_j < 0 }.  Line bundles use the induced
 * subcomplex on S(m); complexes of line bundles use the Cech complex of the
 * maximal-cone cover.  Coordinates are 64-bit; every product is checked.
 */
#pragma once

#include <algorithm>
#include <atomic>
#include <bit>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "lattice.hpp"

namespace torsod::oracle {

using Point = std::vector<std::int64_t>;
using Label = std::vector<std::int64_t>;

struct StackyRay {
    Point v;
    std::int64_t order = 1;

    bool operator==(const StackyRay&) const = default;
};

struct StackyFan {
    std::size_t lattice_rank = 0;
    std::vector<StackyRay> rays;
    std::vector<std::vector<std::size_t>> max_cones;
    bool completeness_verified = false;

    bool operator==(const StackyFan&) const = default;
};

enum class FanErrorKind { Malformed, NonPrimitiveRay, NonSimplicial, ZeroRay, NonPositiveOrder, UnusedRay, Incomplete };

inline const char* to_string(FanErrorKind k)
{
    switch (k) {
        case FanErrorKind::Malformed: return "Malformed";
        case FanErrorKind::NonPrimitiveRay: return "NonPrimitiveRay";
        case FanErrorKind::NonSimplicial: return "NonSimplicial";
        case FanErrorKind::ZeroRay: return "ZeroRay";
        case FanErrorKind::NonPositiveOrder: return "NonPositiveOrder";
        case FanErrorKind::UnusedRay: return "UnusedRay";
        case FanErrorKind::Incomplete: return "Incomplete";
    }
    return "?";
}

class FanError : public std::invalid_argument {
public:
    FanError(FanErrorKind kind, const std::string& what)
        : std::invalid_argument(std::string(to_string(kind)) + ": " + what), kind_(kind)
    {
    }
    FanErrorKind kind() const { return kind_; }

private:
    FanErrorKind kind_;
};

/// Box expansion limit, coordinate overflow or an engine size limit.
class OracleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr std::int64_t coordinate_limit = std::int64_t{1} << 31;
inline constexpr std::size_t max_rays = 63;
inline constexpr std::size_t max_cech_cones = 16;

inline std::int64_t to_int64(const Integer& x)
{
    if (x > coordinate_limit || x < -coordinate_limit) throw OracleError("coordinate " + x.str() + " out of oracle range");
    return static_cast<std::int64_t>(x);
}

inline Point to_point(std::span<const Integer> v)
{
    Point out;
    for (const auto& x : v) out.push_back(to_int64(x));
    return out;
}

inline IntVector to_integers(std::span<const std::int64_t> v)
{
    IntVector out;
    for (auto x : v) out.emplace_back(x);
    return out;
}

inline std::string point_string(std::span<const std::int64_t> p)
{
    std::string s = "(";
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(p[i]);
    }
    return s + ")";
}

namespace detail {

struct Overflow {};

inline std::int64_t mul(std::int64_t a, std::int64_t b)
{
    std::int64_t r;
    if (__builtin_mul_overflow(a, b, &r)) throw Overflow{};
    return r;
}

inline std::int64_t sub(std::int64_t a, std::int64_t b)
{
    std::int64_t r;
    if (__builtin_sub_overflow(a, b, &r)) throw Overflow{};
    return r;
}

template <class T>
T abs_of(const T& x)
{
    return x < 0 ? T(-x) : x;
}

inline std::int64_t gcd_of(std::int64_t a, std::int64_t b) { return std::gcd(a, b); }
inline Integer gcd_of(const Integer& a, const Integer& b) { return torsod::gcd(a, b); }

/// Fraction-free elimination; row contents divided by their gcd after each step.
template <class T>
std::size_t rank_impl(std::vector<std::vector<T>> a)
{
    const std::size_t rows = a.size();
    const std::size_t cols = rows ? a[0].size() : 0;
    std::size_t rank = 0;
    for (std::size_t c = 0; c < cols && rank < rows; ++c) {
        std::size_t best = rows;
        for (std::size_t i = rank; i < rows; ++i)
            if (a[i][c] != 0 && (best == rows || abs_of(a[i][c]) < abs_of(a[best][c]))) best = i;
        if (best == rows) continue;
        std::swap(a[rank], a[best]);
        const T p = a[rank][c];
        for (std::size_t i = rank + 1; i < rows; ++i) {
            if (a[i][c] == 0) continue;
            T g = gcd_of(p, a[i][c]);
            T fi = p / g, fr = a[i][c] / g;
            T content = 0;
            for (std::size_t j = c; j < cols; ++j) {
                if constexpr (std::is_same_v<T, std::int64_t>)
                    a[i][j] = sub(mul(a[i][j], fi), mul(a[rank][j], fr));
                else
                    a[i][j] = a[i][j] * fi - a[rank][j] * fr;
                content = gcd_of(content, a[i][j]);
            }
            if (content > 1)
                for (std::size_t j = c; j < cols; ++j) a[i][j] /= content;
        }
        ++rank;
    }
    return rank;
}

}  // namespace detail

/// Rank over Q of an integer matrix.
inline std::size_t exact_rank(const std::vector<std::vector<std::int64_t>>& a)
{
    try {
        return detail::rank_impl(a);
    } catch (const detail::Overflow&) {
        std::vector<std::vector<Integer>> big;
        for (const auto& row : a) big.emplace_back(row.begin(), row.end());
        return detail::rank_impl(big);
    }
}

inline IntMatrix ray_matrix(const StackyFan& fan, std::span<const std::size_t> idx, bool stacky)
{
    std::vector<IntVector> rows;
    for (auto i : idx) {
        IntVector v = to_integers(fan.rays[i].v);
        if (stacky) v = Integer(fan.rays[i].order) * v;
        rows.push_back(v);
    }
    return IntMatrix::from_rows(rows, fan.lattice_rank);
}

/// Structural checks: ray shapes, primitivity, orders, simplicial cones, coverage of rays.
inline void validate_fan(const StackyFan& fan)
{
    const std::size_t d = fan.lattice_rank;
    if (d == 0) throw FanError(FanErrorKind::Malformed, "lattice_rank must be positive");
    if (fan.rays.empty()) throw FanError(FanErrorKind::Malformed, "fan has no rays");
    if (fan.rays.size() > max_rays) throw FanError(FanErrorKind::Malformed, "too many rays");
    for (std::size_t i = 0; i < fan.rays.size(); ++i) {
        const auto& r = fan.rays[i];
        std::string name = "ray " + std::to_string(i) + " " + point_string(r.v);
        if (r.v.size() != d) throw FanError(FanErrorKind::Malformed, name + " has wrong length");
        for (auto x : r.v)
            if (x > coordinate_limit || x < -coordinate_limit) throw FanError(FanErrorKind::Malformed, name + " out of range");
        if (std::all_of(r.v.begin(), r.v.end(), [](std::int64_t x) { return x == 0; }))
            throw FanError(FanErrorKind::ZeroRay, name);
        if (!is_primitive(to_integers(r.v))) throw FanError(FanErrorKind::NonPrimitiveRay, name + " is not primitive");
        if (r.order < 1 || r.order > coordinate_limit) throw FanError(FanErrorKind::NonPositiveOrder, name);
        for (std::size_t j = 0; j < i; ++j)
            if (fan.rays[j].v == r.v) throw FanError(FanErrorKind::Malformed, name + " duplicates ray " + std::to_string(j));
    }
    std::vector<bool> used(fan.rays.size(), false);
    std::set<std::vector<std::size_t>> seen;
    for (std::size_t c = 0; c < fan.max_cones.size(); ++c) {
        std::vector<std::size_t> cone = fan.max_cones[c];
        std::string name = "cone " + std::to_string(c);
        if (cone.empty()) throw FanError(FanErrorKind::Malformed, name + " is empty");
        for (auto i : cone)
            if (i >= fan.rays.size()) throw FanError(FanErrorKind::Malformed, name + " references missing ray " + std::to_string(i));
        std::sort(cone.begin(), cone.end());
        if (std::adjacent_find(cone.begin(), cone.end()) != cone.end())
            throw FanError(FanErrorKind::Malformed, name + " repeats a ray");
        if (!seen.insert(cone).second) throw FanError(FanErrorKind::Malformed, name + " is listed twice");
        if (cone.size() > d || rank(ray_matrix(fan, cone, false)) != cone.size())
            throw FanError(FanErrorKind::NonSimplicial, name + " rays are linearly dependent");
        for (auto i : cone) used[i] = true;
    }
    for (std::size_t i = 0; i < used.size(); ++i)
        if (!used[i]) throw FanError(FanErrorKind::UnusedRay, "ray " + std::to_string(i) + " lies in no cone");
}

/**
 * Completeness: every facet shared by exactly two cones lying on opposite
 * sides of it, and an interior point of the first cone in no other cone.
 */
inline bool check_complete(const StackyFan& fan)
{
    validate_fan(fan);
    const std::size_t d = fan.lattice_rank;
    if (fan.max_cones.empty()) return false;
    if (d == 1) {
        std::set<std::int64_t> dirs;
        for (const auto& c : fan.max_cones) dirs.insert(fan.rays[c[0]].v[0]);
        return fan.max_cones.size() == 2 && dirs == std::set<std::int64_t>{-1, 1};
    }
    for (const auto& c : fan.max_cones)
        if (c.size() != d) return false;

    std::map<std::vector<std::size_t>, std::vector<std::pair<std::size_t, std::size_t>>> facets;  // facet -> (cone, apex)
    for (std::size_t c = 0; c < fan.max_cones.size(); ++c) {
        std::vector<std::size_t> cone = fan.max_cones[c];
        std::sort(cone.begin(), cone.end());
        for (std::size_t drop = 0; drop < d; ++drop) {
            std::vector<std::size_t> f;
            for (std::size_t i = 0; i < d; ++i)
                if (i != drop) f.push_back(cone[i]);
            facets[f].push_back({c, cone[drop]});
        }
    }
    for (const auto& [f, owners] : facets) {
        if (owners.size() != 2) return false;
        IntMatrix F = ray_matrix(fan, f, false);
        IntVector normal(d);
        for (std::size_t j = 0; j < d; ++j) {
            std::vector<IntVector> cols;
            for (std::size_t k = 0; k < d; ++k)
                if (k != j) cols.push_back(F.col(k));
            Integer minor = d == 1 ? Integer(1) : determinant(IntMatrix::from_columns(cols, d - 1));
            normal[j] = j % 2 ? Integer(-minor) : minor;
        }
        Integer s0 = dot(normal, to_integers(fan.rays[owners[0].second].v));
        Integer s1 = dot(normal, to_integers(fan.rays[owners[1].second].v));
        if (s0 == 0 || s1 == 0 || (s0 > 0) == (s1 > 0)) return false;
    }

    IntVector p(d, 0);
    for (auto i : fan.max_cones[0]) p = p + to_integers(fan.rays[i].v);
    for (std::size_t c = 1; c < fan.max_cones.size(); ++c) {
        IntMatrix cols = ray_matrix(fan, fan.max_cones[c], false).transpose();
        auto lambda = solve_rational(cols, std::span<const Integer>(p));
        if (lambda && std::all_of(lambda->begin(), lambda->end(), [](const Rational& x) { return x >= 0; })) return false;
    }
    return true;
}

/// Validated copy with the completeness flag set; throws Incomplete otherwise.
inline StackyFan require_complete(StackyFan fan)
{
    if (!check_complete(fan)) throw FanError(FanErrorKind::Incomplete, "fan does not cover the ambient space");
    fan.completeness_verified = true;
    return fan;
}

/// Dimensions by degree; support records the nonzero graded pieces.
struct CohomologyVector {
    int min_degree = 0;
    std::vector<std::int64_t> dims;
    std::map<Point, std::vector<std::int64_t>> support;

    std::int64_t dim(int q) const
    {
        int i = q - min_degree;
        return i >= 0 && i < static_cast<int>(dims.size()) ? dims[static_cast<std::size_t>(i)] : 0;
    }
    int max_degree() const { return min_degree + static_cast<int>(dims.size()) - 1; }
    bool is_zero() const
    {
        return std::all_of(dims.begin(), dims.end(), [](std::int64_t x) { return x == 0; });
    }
    std::int64_t euler() const
    {
        std::int64_t s = 0;
        for (std::size_t i = 0; i < dims.size(); ++i) s += ((min_degree + static_cast<int>(i)) % 2 ? -dims[i] : dims[i]);
        return s;
    }
    /// Same dimension in every degree.
    bool same_dims(const CohomologyVector& o) const
    {
        int lo = std::min(min_degree, o.min_degree), hi = std::max(max_degree(), o.max_degree());
        for (int q = lo; q <= hi; ++q)
            if (dim(q) != o.dim(q)) return false;
        return true;
    }
    /// "(1,0,0)" from degree 0, or "deg -1: (0,1)" when negative degrees occur.
    std::string str() const
    {
        std::string s = min_degree == 0 ? "" : "deg " + std::to_string(min_degree) + ": ";
        return s + point_string(dims);
    }
};

struct ComplexTerm {
    Label label;
    int degree = 0;
};

/// Multiplication by the monomial with exponent label(target) - label(source).
struct ComplexMap {
    std::size_t source = 0;
    std::size_t target = 0;
    int sign = 1;
};

struct LineBundleComplex {
    std::vector<ComplexTerm> terms;
    std::vector<ComplexMap> maps;
};

inline LineBundleComplex single(Label label) { return {{{std::move(label), 0}}, {}}; }

/// Koszul resolution of O_Z(label), Z the intersection of the given divisors.
inline LineBundleComplex koszul(const Label& label, const std::vector<std::size_t>& rays)
{
    if (rays.size() > 20) throw OracleError("koszul: too many divisors");
    for (auto r : rays)
        if (r >= label.size()) throw std::invalid_argument("koszul: divisor index out of range");
    LineBundleComplex K;
    const std::uint64_t count = std::uint64_t{1} << rays.size();
    for (std::uint64_t I = 0; I < count; ++I) {
        Label l = label;
        for (std::size_t t = 0; t < rays.size(); ++t)
            if (I >> t & 1) l[rays[t]] -= 1;
        K.terms.push_back({l, -std::popcount(I)});
    }
    for (std::uint64_t I = 0; I < count; ++I) {
        int pos = 0;
        for (std::size_t t = 0; t < rays.size(); ++t)
            if (I >> t & 1) {
                K.maps.push_back({I, I & ~(std::uint64_t{1} << t), pos % 2 ? -1 : 1});
                ++pos;
            }
    }
    return K;
}

/// Structural well-formedness: label lengths, degrees and nonnegative exponents.
inline void check_complex(const LineBundleComplex& C, std::size_t ray_count)
{
    for (const auto& t : C.terms)
        if (t.label.size() != ray_count) throw std::invalid_argument("complex term label has wrong length");
    for (const auto& m : C.maps) {
        if (m.source >= C.terms.size() || m.target >= C.terms.size()) throw std::invalid_argument("complex map index out of range");
        if (m.sign != 1 && m.sign != -1) throw std::invalid_argument("complex map sign must be +-1");
        const auto& s = C.terms[m.source];
        const auto& t = C.terms[m.target];
        if (t.degree != s.degree + 1) throw std::invalid_argument("complex map does not raise degree by one");
        for (std::size_t j = 0; j < ray_count; ++j)
            if (t.label[j] < s.label[j]) throw std::invalid_argument("complex map has a negative exponent");
    }
}

/// d o d = 0: signed path counts between terms two degrees apart cancel.
inline bool squares_to_zero(const LineBundleComplex& C)
{
    std::map<std::pair<std::size_t, std::size_t>, int> total;
    for (const auto& a : C.maps)
        for (const auto& b : C.maps)
            if (a.target == b.source) total[{a.source, b.target}] += a.sign * b.sign;
    return std::all_of(total.begin(), total.end(), [](const auto& kv) { return kv.second == 0; });
}

/// Hom^*(A, B) as a complex of line bundles.
inline LineBundleComplex hom_complex(const LineBundleComplex& A, const LineBundleComplex& B)
{
    LineBundleComplex H;
    const std::size_t nb = B.terms.size();
    auto idx = [nb](std::size_t i, std::size_t j) { return i * nb + j; };
    for (const auto& a : A.terms)
        for (const auto& b : B.terms) {
            if (a.label.size() != b.label.size()) throw std::invalid_argument("hom_complex: label lengths differ");
            Label l(a.label.size());
            for (std::size_t j = 0; j < l.size(); ++j) l[j] = b.label[j] - a.label[j];
            H.terms.push_back({l, b.degree - a.degree});
        }
    for (std::size_t i = 0; i < A.terms.size(); ++i)
        for (const auto& m : B.maps) H.maps.push_back({idx(i, m.source), idx(i, m.target), m.sign});
    for (const auto& m : A.maps)
        for (std::size_t j = 0; j < nb; ++j) {
            int f = B.terms[j].degree - A.terms[m.target].degree;
            H.maps.push_back({idx(m.target, j), idx(m.source, j), (f % 2 ? 1 : -1) * m.sign});
        }
    return H;
}

struct OracleOptions {
    std::int64_t padding = 1;
    int max_doublings = 8;
    std::size_t threads = 0;  ///< 0: TORSOD_THREADS or hardware concurrency
    std::uint64_t max_box_points = 20'000'000;
};

/// Worker count: TORSOD_THREADS caps the hardware concurrency.
inline std::size_t default_threads()
{
    std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("TORSOD_THREADS")) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return std::min<std::size_t>(static_cast<std::size_t>(v), hw);
    }
    return hw;
}

class CohomologyOracle {
public:
    explicit CohomologyOracle(StackyFan fan, OracleOptions options = {})
        : fan_(require_complete(std::move(fan))), options_(options), caches_(std::make_unique<Caches>())
    {
        d_ = fan_.lattice_rank;
        for (const auto& r : fan_.rays) {
            Point b(d_);
            for (std::size_t i = 0; i < d_; ++i) b[i] = detail::mul(r.v[i], r.order);
            b_.push_back(b);
        }
        build_faces();
        build_vertices();
        build_cech();
        if (options_.threads == 0) options_.threads = default_threads();
    }

    const StackyFan& fan() const { return fan_; }
    std::size_t dimension() const { return d_; }
    std::size_t ray_count() const { return fan_.rays.size(); }

    /// K = (-1, ..., -1).
    Label canonical_label() const { return Label(ray_count(), -1); }

    /// Rays with r_j <m, v_j> + k_j < 0.
    std::uint64_t violated(const Label& k, const Point& m) const
    {
        check_label(k);
        check_point(m);
        return violated_mask(pairings(m), k);
    }

    /// h^0..h^d of the weight-m piece.
    std::vector<std::int64_t> graded_piece(const Label& k, const Point& m) const
    {
        return reduced_homology(violated(k, m));
    }

    CohomologyVector cohomology(const Label& k) const
    {
        check_label(k);
        {
            std::lock_guard<std::mutex> lock(caches_->bundle_mutex);
            auto it = caches_->bundles.find(k);
            if (it != caches_->bundles.end()) return it->second;
        }
        std::vector<Interval> offsets;
        for (auto x : k) offsets.push_back({x, x});
        CohomologyVector out;
        out.dims.assign(d_ + 1, 0);
        scan(offsets, d_ + 1, [&](const Point&, const Point& pair, std::vector<std::int64_t>& acc) {
            acc = reduced_homology(violated_mask(pair, k));
        }, out);
        std::lock_guard<std::mutex> lock(caches_->bundle_mutex);
        caches_->bundles.emplace(k, out);
        return out;
    }

    /// Hom^q(O(kp), O(k)) = H^q(O(k - kp)).
    CohomologyVector ext_groups(const Label& k, const Label& kp) const
    {
        check_label(k);
        check_label(kp);
        Label diff(k.size());
        for (std::size_t j = 0; j < k.size(); ++j) diff[j] = detail::sub(k[j], kp[j]);
        return cohomology(diff);
    }

    /// h^q(k) = h^{d-q}(K - k) for all q.
    bool serre_duality_check(const Label& k) const
    {
        Label dual(k.size());
        for (std::size_t j = 0; j < k.size(); ++j) dual[j] = -1 - k[j];
        CohomologyVector a = cohomology(k), b = cohomology(dual);
        for (std::size_t q = 0; q <= d_; ++q)
            if (a.dims[q] != b.dims[d_ - q]) return false;
        return true;
    }

    /// Signed face count of each violated subcomplex, summed over weights.
    std::int64_t euler_characteristic(const Label& k) const
    {
        check_label(k);
        std::vector<Interval> offsets;
        for (auto x : k) offsets.push_back({x, x});
        CohomologyVector out;
        out.dims.assign(1, 0);
        scan(offsets, 1, [&](const Point&, const Point& pair, std::vector<std::int64_t>& acc) {
            acc[0] = face_euler(violated_mask(pair, k));
        }, out);
        return out.dims[0];
    }

    /// Lattice points of the section polytope, enumerated from its own vertices.
    std::int64_t h0_count(const Label& k) const
    {
        check_label(k);
        std::vector<Rational> lo(d_), hi(d_);
        bool any = false;
        const std::size_t n = ray_count();
        std::vector<std::size_t> pick;
        std::function<void(std::size_t)> rec = [&](std::size_t start) {
            if (pick.size() == d_) {
                std::vector<IntVector> rows;
                IntVector rhs;
                for (auto j : pick) {
                    rows.push_back(to_integers(b_[j]));
                    rhs.emplace_back(-k[j]);
                }
                auto m = solve_rational(IntMatrix::from_rows(rows, d_), std::span<const Integer>(rhs));
                if (!m) return;
                for (std::size_t j = 0; j < n; ++j) {
                    Rational s = 0;
                    for (std::size_t i = 0; i < d_; ++i) s += (*m)[i] * b_[j][i];
                    if (s + k[j] < 0) return;
                }
                for (std::size_t i = 0; i < d_; ++i) {
                    if (!any || (*m)[i] < lo[i]) lo[i] = (*m)[i];
                    if (!any || (*m)[i] > hi[i]) hi[i] = (*m)[i];
                }
                any = true;
                return;
            }
            for (std::size_t j = start; j < n; ++j) {
                pick.push_back(j);
                rec(j + 1);
                pick.pop_back();
            }
        };
        rec(0);
        if (!any) return 0;
        Point a(d_), b(d_);
        for (std::size_t i = 0; i < d_; ++i) {
            a[i] = to_int64(ceil(lo[i]));
            b[i] = to_int64(floor(hi[i]));
        }
        std::int64_t count = 0;
        for_each_point(a, b, [&](const Point& m) {
            Point pr = pairings(m);
            for (std::size_t j = 0; j < n; ++j)
                if (pr[j] + k[j] < 0) return;
            ++count;
        });
        return count;
    }

    /// Hypercohomology through the Cech complex of the maximal-cone cover.
    CohomologyVector hypercohomology(const LineBundleComplex& C) const
    {
        check_complex(C, ray_count());
        if (C.terms.empty()) return {};
        for (const auto& t : C.terms) check_label(t.label);
        int lo = C.terms[0].degree, hi = lo;
        for (const auto& t : C.terms) {
            lo = std::min(lo, t.degree);
            hi = std::max(hi, t.degree);
        }
        const std::size_t width = static_cast<std::size_t>(hi - lo) + cones_;
        std::string shape = std::to_string(lo) + ";";
        for (const auto& t : C.terms) shape += std::to_string(t.degree) + ",";
        shape += ";";
        for (const auto& m : C.maps) shape += std::to_string(m.source) + ">" + std::to_string(m.target) + (m.sign > 0 ? "+" : "-");

        std::vector<Interval> offsets(ray_count(), {0, 0});
        for (std::size_t j = 0; j < ray_count(); ++j) {
            offsets[j] = {C.terms[0].label[j], C.terms[0].label[j]};
            for (const auto& t : C.terms) {
                offsets[j].lo = std::min(offsets[j].lo, t.label[j]);
                offsets[j].hi = std::max(offsets[j].hi, t.label[j]);
            }
        }
        CohomologyVector out;
        out.min_degree = lo;
        out.dims.assign(width, 0);
        scan(offsets, width, [&](const Point&, const Point& pair, std::vector<std::int64_t>& acc) {
            std::vector<std::uint64_t> masks;
            for (const auto& t : C.terms) masks.push_back(violated_mask(pair, t.label));
            acc = cech_piece(C, lo, width, shape, masks);
        }, out);
        trim(out);
        return out;
    }

    /// Ext^q(A, B).
    CohomologyVector ext(const LineBundleComplex& A, const LineBundleComplex& B) const
    {
        return hypercohomology(hom_complex(A, B));
    }

    /// Rank of K_0: sum over maximal cones of |det(r_j v_j)|.
    Integer k0_rank() const
    {
        Integer total = 0;
        for (const auto& c : fan_.max_cones) total += abs_value(determinant(ray_matrix(fan_, c, true)));
        return total;
    }

private:
    struct Interval {
        std::int64_t lo, hi;
    };

    struct Caches {
        std::mutex bundle_mutex;
        std::map<Label, CohomologyVector> bundles;
        std::mutex homology_mutex;
        std::unordered_map<std::uint64_t, std::vector<std::int64_t>> homology;
        std::mutex cech_mutex;
        std::unordered_map<std::string, std::vector<std::int64_t>> cech;
    };

    struct VertexSolver {
        std::vector<std::size_t> rays;        ///< d rays
        std::vector<std::vector<__int128>> adj;  ///< adjugate of the stacky ray matrix
        __int128 det;
    };

    struct Cell {
        std::uint64_t cones;  ///< bitmask over maximal cones
        std::uint64_t face;   ///< rays common to all cones in the cell
        int size;
        std::vector<std::pair<std::size_t, int>> cofaces;  ///< (cell index, sign)
    };

    StackyFan fan_;
    OracleOptions options_;
    std::unique_ptr<Caches> caches_;
    std::size_t d_ = 0;
    std::vector<Point> b_;
    std::vector<std::uint64_t> faces_;  ///< every face, including the empty one
    std::vector<VertexSolver> solvers_;
    std::vector<Cell> cells_;
    std::size_t cones_ = 0;

    void check_label(const Label& k) const
    {
        if (k.size() != ray_count())
            throw std::invalid_argument("label has " + std::to_string(k.size()) + " entries, fan has " +
                                        std::to_string(ray_count()) + " rays");
        for (auto x : k)
            if (x > coordinate_limit || x < -coordinate_limit) throw OracleError("label entry out of oracle range");
    }

    void check_point(const Point& m) const
    {
        if (m.size() != d_) throw std::invalid_argument("weight has wrong length");
        for (auto x : m)
            if (x > coordinate_limit || x < -coordinate_limit) throw OracleError("weight out of oracle range");
    }

    Point pairings(const Point& m) const
    {
        Point out(b_.size());
        for (std::size_t j = 0; j < b_.size(); ++j) {
            std::int64_t s = 0;
            for (std::size_t i = 0; i < d_; ++i) s += detail::mul(m[i], b_[j][i]);
            out[j] = s;
        }
        return out;
    }

    static std::uint64_t violated_mask(const Point& pair, const Label& k)
    {
        std::uint64_t s = 0;
        for (std::size_t j = 0; j < pair.size(); ++j)
            if (pair[j] + k[j] < 0) s |= std::uint64_t{1} << j;
        return s;
    }

    void build_faces()
    {
        std::set<std::uint64_t> all;
        for (const auto& c : fan_.max_cones) {
            std::uint64_t mask = 0;
            for (auto i : c) mask |= std::uint64_t{1} << i;
            for (std::uint64_t sub = mask;; sub = (sub - 1) & mask) {
                all.insert(sub);
                if (sub == 0) break;
            }
        }
        faces_.assign(all.begin(), all.end());
    }

    void build_vertices()
    {
        const std::size_t n = ray_count();
        std::vector<std::size_t> pick;
        std::function<void(std::size_t)> rec = [&](std::size_t start) {
            if (pick.size() == d_) {
                IntMatrix B = ray_matrix(fan_, pick, true);
                Integer det = determinant(B);
                if (det == 0) return;
                VertexSolver s{pick, std::vector<std::vector<__int128>>(d_, std::vector<__int128>(d_)), 0};
                for (std::size_t i = 0; i < d_; ++i)
                    for (std::size_t j = 0; j < d_; ++j) {
                        // adj(B)_{ij} = (-1)^{i+j} det(B without row j, column i)
                        Integer minor = 1;
                        if (d_ > 1) {
                            std::vector<IntVector> rows;
                            for (std::size_t r = 0; r < d_; ++r) {
                                if (r == j) continue;
                                IntVector row;
                                for (std::size_t c = 0; c < d_; ++c)
                                    if (c != i) row.push_back(B(r, c));
                                rows.push_back(row);
                            }
                            minor = determinant(IntMatrix::from_rows(rows, d_ - 1));
                        }
                        s.adj[i][j] = static_cast<__int128>(to_int64((i + j) % 2 ? Integer(-minor) : minor));
                    }
                s.det = static_cast<__int128>(to_int64(det));
                solvers_.push_back(std::move(s));
                return;
            }
            for (std::size_t j = start; j < n; ++j) {
                pick.push_back(j);
                rec(j + 1);
                pick.pop_back();
            }
        };
        rec(0);
        if (solvers_.empty()) throw OracleError("rays do not span the lattice");
    }

    void build_cech()
    {
        cones_ = fan_.max_cones.size();
        if (cones_ > max_cech_cones) return;  // Cech engine unavailable; hypercohomology will refuse
        std::vector<std::uint64_t> cone_masks;
        for (const auto& c : fan_.max_cones) {
            std::uint64_t m = 0;
            for (auto i : c) m |= std::uint64_t{1} << i;
            cone_masks.push_back(m);
        }
        std::vector<std::uint64_t> order;
        for (std::uint64_t J = 1; J < (std::uint64_t{1} << cones_); ++J) order.push_back(J);
        std::stable_sort(order.begin(), order.end(), [](std::uint64_t a, std::uint64_t b) {
            return std::popcount(a) < std::popcount(b) || (std::popcount(a) == std::popcount(b) && a < b);
        });
        std::vector<std::size_t> index(std::size_t{1} << cones_, 0);
        for (std::size_t i = 0; i < order.size(); ++i) index[order[i]] = i;
        for (std::uint64_t J : order) {
            std::uint64_t face = ~std::uint64_t{0};
            for (std::size_t c = 0; c < cones_; ++c)
                if (J >> c & 1) face &= cone_masks[c];
            cells_.push_back({J, face, std::popcount(J), {}});
        }
        for (auto& cell : cells_)
            for (std::size_t c = 0; c < cones_; ++c) {
                if (cell.cones >> c & 1) continue;
                std::uint64_t J = cell.cones | std::uint64_t{1} << c;
                int pos = std::popcount(J & ((std::uint64_t{1} << c) - 1));
                cell.cofaces.push_back({index[J], pos % 2 ? -1 : 1});
            }
    }

    /// Reduced homology of the induced subcomplex on S, degrees -1..d-1, as h^0..h^d.
    std::vector<std::int64_t> reduced_homology(std::uint64_t S) const
    {
        {
            std::lock_guard<std::mutex> lock(caches_->homology_mutex);
            auto it = caches_->homology.find(S);
            if (it != caches_->homology.end()) return it->second;
        }
        std::vector<std::vector<std::uint64_t>> by_size(d_ + 1);
        for (auto f : faces_)
            if ((f & ~S) == 0) by_size[static_cast<std::size_t>(std::popcount(f))].push_back(f);
        // rank of the boundary from size p to size p-1, p = 1..d
        std::vector<std::size_t> rk(d_ + 2, 0);
        for (std::size_t p = 1; p <= d_; ++p) {
            const auto& src = by_size[p];
            const auto& dst = by_size[p - 1];
            if (src.empty() || dst.empty()) continue;
            std::map<std::uint64_t, std::size_t> pos;
            for (std::size_t i = 0; i < dst.size(); ++i) pos[dst[i]] = i;
            std::vector<std::vector<std::int64_t>> M(dst.size(), std::vector<std::int64_t>(src.size(), 0));
            for (std::size_t c = 0; c < src.size(); ++c) {
                int t = 0;
                for (std::size_t v = 0; v < 64; ++v)
                    if (src[c] >> v & 1) {
                        M[pos.at(src[c] & ~(std::uint64_t{1} << v))][c] = t % 2 ? -1 : 1;
                        ++t;
                    }
            }
            rk[p] = exact_rank(M);
        }
        std::vector<std::int64_t> h(d_ + 1, 0);
        for (std::size_t p = 0; p <= d_; ++p)  // chain size p = reduced degree p-1 = cohomological degree p
            h[p] = static_cast<std::int64_t>(by_size[p].size()) - static_cast<std::int64_t>(rk[p]) -
                   static_cast<std::int64_t>(p + 1 <= d_ ? rk[p + 1] : 0);
        std::lock_guard<std::mutex> lock(caches_->homology_mutex);
        caches_->homology.emplace(S, h);
        return h;
    }

    /// Sum over faces f of S (with the empty face) of (-1)^{|f|}.
    std::int64_t face_euler(std::uint64_t S) const
    {
        std::int64_t s = 0;
        for (auto f : faces_)
            if ((f & ~S) == 0) s += std::popcount(f) % 2 ? -1 : 1;
        return s;
    }

    std::vector<std::int64_t> cech_piece(const LineBundleComplex& C, int lo, std::size_t width, const std::string& shape,
                                         const std::vector<std::uint64_t>& masks) const
    {
        if (cells_.empty()) throw OracleError("too many maximal cones for the Cech engine");
        std::string key = shape;
        key.append(reinterpret_cast<const char*>(masks.data()), masks.size() * sizeof(std::uint64_t));
        {
            std::lock_guard<std::mutex> lock(caches_->cech_mutex);
            auto it = caches_->cech.find(key);
            if (it != caches_->cech.end()) return it->second;
        }
        const std::size_t T = C.terms.size(), N = cells_.size();
        // basis index per (term, cell) within its total degree, or -1 if inactive
        std::vector<std::int64_t> slot(T * N, -1);
        std::vector<std::size_t> count(width, 0);
        auto degree_of = [&](std::size_t t, std::size_t c) {
            return static_cast<std::size_t>(C.terms[t].degree - lo + cells_[c].size - 1);
        };
        for (std::size_t t = 0; t < T; ++t)
            for (std::size_t c = 0; c < N; ++c)
                if ((cells_[c].face & masks[t]) == 0) slot[t * N + c] = static_cast<std::int64_t>(count[degree_of(t, c)]++);
        std::vector<std::vector<std::vector<std::int64_t>>> D(width);  // D[q]: degree q -> q+1
        for (std::size_t q = 0; q + 1 < width; ++q)
            if (count[q] && count[q + 1]) D[q].assign(count[q + 1], std::vector<std::int64_t>(count[q], 0));
        for (std::size_t t = 0; t < T; ++t) {
            const int eps = C.terms[t].degree % 2 ? -1 : 1;
            for (std::size_t c = 0; c < N; ++c) {
                std::int64_t s = slot[t * N + c];
                if (s < 0) continue;
                std::size_t q = degree_of(t, c);
                for (const auto& [c2, sign] : cells_[c].cofaces) {
                    std::int64_t s2 = slot[t * N + c2];
                    if (s2 < 0) throw std::logic_error("Cech coface inactive");
                    D[q][static_cast<std::size_t>(s2)][static_cast<std::size_t>(s)] += eps * sign;
                }
            }
        }
        for (const auto& m : C.maps)
            for (std::size_t c = 0; c < N; ++c) {
                std::int64_t s = slot[m.source * N + c];
                if (s < 0) continue;
                std::int64_t s2 = slot[m.target * N + c];
                if (s2 < 0) throw std::logic_error("complex map leaves the active region");
                D[degree_of(m.source, c)][static_cast<std::size_t>(s2)][static_cast<std::size_t>(s)] += m.sign;
            }
        std::vector<std::size_t> rk(width, 0);
        for (std::size_t q = 0; q + 1 < width; ++q)
            if (!D[q].empty()) rk[q] = exact_rank(D[q]);
        std::vector<std::int64_t> h(width, 0);
        for (std::size_t q = 0; q < width; ++q)
            h[q] = static_cast<std::int64_t>(count[q]) - static_cast<std::int64_t>(rk[q]) -
                   static_cast<std::int64_t>(q ? rk[q - 1] : 0);
        std::lock_guard<std::mutex> lock(caches_->cech_mutex);
        caches_->cech.emplace(std::move(key), h);
        return h;
    }

    static void trim(CohomologyVector& v)
    {
        std::size_t a = 0, b = v.dims.size();
        while (a < b && v.dims[a] == 0) ++a;
        while (b > a && v.dims[b - 1] == 0) --b;
        if (a == b) {
            v.min_degree = 0;
            v.dims.clear();
            return;
        }
        v.min_degree += static_cast<int>(a);
        v.dims = std::vector<std::int64_t>(v.dims.begin() + static_cast<std::ptrdiff_t>(a),
                                           v.dims.begin() + static_cast<std::ptrdiff_t>(b));
        for (auto& [m, dims] : v.support) {
            (void)m;
            std::vector<std::int64_t> t(dims.begin() + static_cast<std::ptrdiff_t>(a),
                                        dims.begin() + static_cast<std::ptrdiff_t>(b));
            dims = t;
        }
    }

    /**
     * Bounding box of all vertices of the arrangement <m, b_j> = -k_j - 1/2
     * for k_j anywhere in the given per-ray intervals.  Nonzero graded
     * pieces lie in bounded chambers, hence inside this box.
     */
    std::pair<Point, Point> vertex_box(const std::vector<Interval>& offsets) const
    {
        Point lo(d_, std::numeric_limits<std::int64_t>::max()), hi(d_, std::numeric_limits<std::int64_t>::min());
        auto floor_div = [](__int128 a, __int128 b) {
            __int128 q = a / b;
            if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
            return q;
        };
        for (const auto& s : solvers_) {
            __int128 den = 2 * s.det;
            for (std::size_t i = 0; i < d_; ++i) {
                // m_i = sum_j adj_ij * (-(2 k_j + 1)) / (2 det)
                __int128 mx = 0, mn = 0;
                for (std::size_t t = 0; t < d_; ++t) {
                    const Interval& iv = offsets[s.rays[t]];
                    __int128 c = s.adj[i][t] * (den > 0 ? 1 : -1);
                    __int128 a1 = -c * (2 * static_cast<__int128>(iv.lo) + 1);
                    __int128 a2 = -c * (2 * static_cast<__int128>(iv.hi) + 1);
                    mx += std::max(a1, a2);
                    mn += std::min(a1, a2);
                }
                __int128 ad = den > 0 ? den : -den;
                __int128 f = floor_div(mn, ad);
                __int128 c = -floor_div(-mx, ad);
                if (f < -coordinate_limit || c > coordinate_limit) throw OracleError("box out of oracle range");
                lo[i] = std::min<std::int64_t>(lo[i], static_cast<std::int64_t>(f));
                hi[i] = std::max<std::int64_t>(hi[i], static_cast<std::int64_t>(c));
            }
        }
        return {lo, hi};
    }

    template <class F>
    static void for_each_point(const Point& lo, const Point& hi, F&& f)
    {
        const std::size_t d = lo.size();
        for (std::size_t i = 0; i < d; ++i)
            if (lo[i] > hi[i]) return;
        Point m = lo;
        for (;;) {
            f(m);
            std::size_t i = 0;
            while (i < d && m[i] == hi[i]) {
                m[i] = lo[i];
                ++i;
            }
            if (i == d) return;
            ++m[i];
        }
    }

    /**
     * Sum per-weight contributions over the padded vertex box, doubling the
     * padding while the outer shell carries anything nonzero.
     */
    template <class Eval>
    void scan(const std::vector<Interval>& offsets, std::size_t width, Eval&& eval, CohomologyVector& out) const
    {
        auto [vlo, vhi] = vertex_box(offsets);
        std::int64_t pad = options_.padding;
        for (int attempt = 0; attempt <= options_.max_doublings; ++attempt, pad *= 2) {
            Point lo(d_), hi(d_);
            std::uint64_t total = 1;
            std::vector<std::uint64_t> extent(d_);
            for (std::size_t i = 0; i < d_; ++i) {
                lo[i] = vlo[i] - pad;
                hi[i] = vhi[i] + pad;
                extent[i] = static_cast<std::uint64_t>(hi[i] - lo[i] + 1);
                if (total > options_.max_box_points / extent[i]) throw OracleError("cohomology box too large");
                total *= extent[i];
            }
            const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(options_.threads, total / 256 + 1));
            struct Chunk {
                std::vector<std::int64_t> sum;
                std::vector<std::pair<Point, std::vector<std::int64_t>>> support;
                bool shell = false;
                std::exception_ptr error;
            };
            std::vector<Chunk> chunks(workers);
            auto work = [&](std::size_t w) {
                Chunk& ch = chunks[w];
                ch.sum.assign(width, 0);
                try {
                    std::uint64_t begin = total * w / workers, end = total * (w + 1) / workers;
                    std::vector<std::int64_t> acc(width);
                    Point m(d_);
                    for (std::uint64_t idx = begin; idx < end; ++idx) {
                        std::uint64_t r = idx;
                        bool on_shell = false;
                        for (std::size_t i = 0; i < d_; ++i) {
                            m[i] = lo[i] + static_cast<std::int64_t>(r % extent[i]);
                            r /= extent[i];
                            on_shell = on_shell || m[i] == lo[i] || m[i] == hi[i];
                        }
                        std::fill(acc.begin(), acc.end(), 0);
                        eval(m, pairings(m), acc);
                        if (std::all_of(acc.begin(), acc.end(), [](std::int64_t x) { return x == 0; })) continue;
                        if (on_shell) ch.shell = true;
                        for (std::size_t q = 0; q < width; ++q) ch.sum[q] += acc[q];
                        ch.support.emplace_back(m, acc);
                    }
                } catch (...) {
                    ch.error = std::current_exception();
                }
            };
            if (workers == 1) {
                work(0);
            } else {
                std::vector<std::thread> pool;
                for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w);
                for (auto& t : pool) t.join();
            }
            bool shell = false;
            for (auto& ch : chunks) {
                if (ch.error) std::rethrow_exception(ch.error);
                shell = shell || ch.shell;
            }
            if (shell) continue;
            for (auto& ch : chunks) {
                for (std::size_t q = 0; q < width; ++q) out.dims[q] += ch.sum[q];
                for (auto& [m, v] : ch.support) out.support.emplace(std::move(m), std::move(v));
            }
            return;
        }
        throw OracleError("cohomology box expansion limit reached");
    }
};

}  // namespace torsod::oracle
