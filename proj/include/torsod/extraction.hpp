/**
 * Local model of a toric divisorial contraction / extraction with stack
 * structure, and the lattice data of the induced fibration D -> F.
 *
 * Index conventions: the datum has n+1 rays v_0..v_n (0-based).  Rays
 * 0..alpha-1 carry positive relation coefficients, rays alpha..n-1 carry
 * zero coefficients and ray n is the exceptional ray with a negative
 * coefficient.
 */
#pragma once

#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "lattice.hpp"

namespace torsod {

/// Unvalidated input, as read from a file.
struct RawDatum {
    std::size_t n = 0;
    std::size_t alpha = 0;
    std::vector<IntVector> rays;
    IntVector a;
    IntVector r;
};

enum class DatumErrorKind {
    Malformed,
    RelationViolated,
    NotCoprime,
    SignPattern,
    NonPrimitiveRay,
    DuplicateRay,
    DegenerateRays,
    NonPositiveOrder,
};

inline const char* to_string(DatumErrorKind k)
{
    switch (k) {
        case DatumErrorKind::Malformed: return "Malformed";
        case DatumErrorKind::RelationViolated: return "RelationViolated";
        case DatumErrorKind::NotCoprime: return "NotCoprime";
        case DatumErrorKind::SignPattern: return "SignPattern";
        case DatumErrorKind::NonPrimitiveRay: return "NonPrimitiveRay";
        case DatumErrorKind::DuplicateRay: return "DuplicateRay";
        case DatumErrorKind::DegenerateRays: return "DegenerateRays";
        case DatumErrorKind::NonPositiveOrder: return "NonPositiveOrder";
    }
    return "Unknown";
}

class DatumError : public std::invalid_argument {
public:
    DatumError(DatumErrorKind kind, const std::string& what)
        : std::invalid_argument(std::string(to_string(kind)) + ": " + what), kind_(kind)
    {
    }
    DatumErrorKind kind() const { return kind_; }

private:
    DatumErrorKind kind_;
};

class ExtractionDatum;
ExtractionDatum validate(const RawDatum& raw);

/**
 * Validated local datum: sum a_i v_i = 0 with coprime a_i, sign pattern
 * (+ ... + 0 ... 0 -), primitive pairwise distinct rays spanning Q^n, and
 * positive stack orders r_i.
 */
class ExtractionDatum {
public:
    std::size_t n() const { return n_; }
    std::size_t alpha() const { return alpha_; }
    const std::vector<IntVector>& rays() const { return rays_; }
    const IntVector& coefficients() const { return a_; }
    const IntVector& orders() const { return r_; }
    const IntVector& ray(std::size_t i) const { return rays_.at(i); }
    const Integer& a(std::size_t i) const { return a_.at(i); }
    const Integer& r(std::size_t i) const { return r_.at(i); }

    /// a_i / r_i
    Rational ratio(std::size_t i) const { return Rational(a_.at(i), r_.at(i)); }

    /// sigma = sum_{i<=n} a_i / r_i
    Rational sigma() const
    {
        Rational s = 0;
        for (std::size_t i = 0; i <= n_; ++i) s += ratio(i);
        return s;
    }

    /// sum of a_i / r_i over the positive part.
    Rational sigma_alpha() const
    {
        Rational s = 0;
        for (std::size_t i = 0; i < alpha_; ++i) s += ratio(i);
        return s;
    }

    /// |a_n| / r_n: the change of the weighted sum per unit of the exceptional coordinate.
    Rational exceptional_step() const { return -ratio(n_); }

    RawDatum raw() const { return {n_, alpha_, rays_, a_, r_}; }

    bool operator==(const ExtractionDatum&) const = default;

private:
    ExtractionDatum() = default;
    friend ExtractionDatum validate(const RawDatum& raw);

    std::size_t n_ = 0;
    std::size_t alpha_ = 0;
    std::vector<IntVector> rays_;
    IntVector a_;
    IntVector r_;
};

inline ExtractionDatum validate(const RawDatum& raw)
{
    const std::size_t n = raw.n;
    if (n == 0) throw DatumError(DatumErrorKind::Malformed, "n must be positive");
    if (raw.rays.size() != n + 1 || raw.a.size() != n + 1 || raw.r.size() != n + 1)
        throw DatumError(DatumErrorKind::Malformed, "rays, a and r must each have n+1 entries");
    for (std::size_t i = 0; i <= n; ++i)
        if (raw.rays[i].size() != n)
            throw DatumError(DatumErrorKind::Malformed, "ray " + std::to_string(i) + " does not have n entries");
    if (raw.alpha < 1 || raw.alpha > n)
        throw DatumError(DatumErrorKind::Malformed, "alpha must satisfy 1 <= alpha <= n");

    for (std::size_t i = 0; i <= n; ++i)
        if (raw.r[i] <= 0)
            throw DatumError(DatumErrorKind::NonPositiveOrder, "order r_" + std::to_string(i + 1) + " must be positive");

    for (std::size_t i = 0; i <= n; ++i)
        if (!is_primitive(raw.rays[i]))
            throw DatumError(DatumErrorKind::NonPrimitiveRay, "ray " + to_string(raw.rays[i]) + " is not primitive");

    std::set<IntVector> seen;
    for (const auto& v : raw.rays)
        if (!seen.insert(v).second) throw DatumError(DatumErrorKind::DuplicateRay, "ray " + to_string(v) + " repeated");

    IntVector rel(n, 0);
    for (std::size_t i = 0; i <= n; ++i)
        for (std::size_t j = 0; j < n; ++j) rel[j] += raw.a[i] * raw.rays[i][j];
    if (!is_zero(rel))
        throw DatumError(DatumErrorKind::RelationViolated, "sum a_i v_i = " + to_string(rel) + " is not zero");

    if (gcd(raw.a) != 1) throw DatumError(DatumErrorKind::NotCoprime, "gcd of coefficients is " + gcd(raw.a).str());

    for (std::size_t i = 0; i <= n; ++i) {
        const Integer& ai = raw.a[i];
        const bool ok = i < raw.alpha ? ai > 0 : (i < n ? ai == 0 : ai < 0);
        if (!ok)
            throw DatumError(DatumErrorKind::SignPattern,
                             "coefficient a_" + std::to_string(i + 1) + " = " + ai.str() +
                                 " breaks the sign pattern for alpha = " + std::to_string(raw.alpha));
    }

    std::vector<IntVector> cone(raw.rays.begin(), raw.rays.begin() + static_cast<std::ptrdiff_t>(n));
    if (rank(IntMatrix::from_rows(cone)) != n)
        throw DatumError(DatumErrorKind::DegenerateRays, "rays v_1..v_n are not linearly independent");

    ExtractionDatum d;
    d.n_ = n;
    d.alpha_ = raw.alpha;
    d.rays_ = raw.rays;
    d.a_ = raw.a;
    d.r_ = raw.r;
    return d;
}

enum class BirationalType { Contraction, LogCrepant, Extraction };

inline const char* to_string(BirationalType t)
{
    switch (t) {
        case BirationalType::Contraction: return "Contraction";
        case BirationalType::LogCrepant: return "LogCrepant";
        case BirationalType::Extraction: return "Extraction";
    }
    return "Unknown";
}

struct BirationalClass {
    BirationalType type;
    Rational sigma;
};

/// Sign of sigma = sum a_i / r_i: negative is an extraction.
inline BirationalClass classify(const ExtractionDatum& d)
{
    Rational s = d.sigma();
    BirationalType t = s < 0 ? BirationalType::Extraction
                             : (s == 0 ? BirationalType::LogCrepant : BirationalType::Contraction);
    return {t, s};
}

/// w(k) = sum a_i k_i / r_i over all n+1 indices.
inline Rational weighted_sum(const ExtractionDatum& d, std::span<const Integer> k)
{
    if (k.size() != d.n() + 1)
        throw std::invalid_argument("weighted_sum: label has " + std::to_string(k.size()) + " entries, expected " +
                                    std::to_string(d.n() + 1));
    Rational w = 0;
    for (std::size_t i = 0; i <= d.n(); ++i)
        if (d.a(i) != 0) w += Rational(d.a(i) * k[i], d.r(i));
    return w;
}

/**
 * Lattice data of D -> F.  N_D = N_X / Z v_n has rank n-1; N_F is N_D
 * modulo the saturated span of the images of v_0..v_{alpha-1} and has
 * rank n-alpha.  `s` and `tilde_v` are indexed by i - alpha.
 */
struct FibrationDatum {
    Integer t;
    IntVector t_i;                  ///< n entries
    IntVector bar_a;                ///< n entries, zero beyond alpha
    std::vector<IntVector> bar_v;   ///< n primitive vectors in N_D
    IntVector s;                    ///< n - alpha entries
    std::vector<IntVector> tilde_v; ///< n - alpha primitive vectors in N_F
    IntMatrix proj_XD;              ///< (n-1) x n
    IntMatrix proj_DF;              ///< (n-alpha) x (n-1)

    std::size_t rank_D() const { return proj_XD.rows(); }
    std::size_t rank_F() const { return proj_DF.rows(); }
};

inline FibrationDatum induced_fibration(const ExtractionDatum& d)
{
    const std::size_t n = d.n(), alpha = d.alpha();
    FibrationDatum f;
    f.proj_XD = quotient_project(n, {d.ray(n)}, false).projection;

    for (std::size_t i = 0; i < n; ++i) {
        IntVector img = f.proj_XD.apply(d.ray(i));
        auto [p, c] = primitivize(img);
        f.bar_v.push_back(std::move(p));
        f.t_i.push_back(std::move(c));
    }

    f.t = 0;
    for (std::size_t i = 0; i < alpha; ++i) f.t = gcd(f.t, d.a(i) * f.t_i[i]);
    for (std::size_t i = 0; i < n; ++i) f.bar_a.push_back(d.a(i) * f.t_i[i] / f.t);

    std::vector<IntVector> span(f.bar_v.begin(), f.bar_v.begin() + static_cast<std::ptrdiff_t>(alpha));
    f.proj_DF = quotient_project(n - 1, span, true).projection;
    for (std::size_t i = alpha; i < n; ++i) {
        IntVector img = f.proj_DF.apply(f.bar_v[i]);
        auto [p, c] = primitivize(img);
        f.tilde_v.push_back(std::move(p));
        f.s.push_back(std::move(c));
    }
    return f;
}

/**
 * Q-Cartier restriction coefficients, each recomputed from the fan
 * geometry and checked against the closed forms 1/t_i and 1/(s_i t_i).
 */
struct RestrictionTable {
    std::vector<Rational> pullback_exceptional;  ///< coefficient of D_n in phi^* E_i, i < n
    std::vector<Rational> to_D;                  ///< D_i|_D = to_D[i] * bar D_i, i < n
    std::vector<Rational> fibre_pullback;        ///< bar phi^* bar E_i = fibre_pullback * bar D_i, i >= alpha
    std::vector<Rational> to_F;                  ///< E_i|_F = to_F * bar E_i, i >= alpha
};

inline RestrictionTable restriction_coefficients(const ExtractionDatum& d, const FibrationDatum& f)
{
    const std::size_t n = d.n(), alpha = d.alpha();
    auto fail = [](const std::string& what) { throw std::logic_error("restriction chain inconsistent: " + what); };
    RestrictionTable tab;

    // phi^* E_i = D_i + <m_i, v_n> D_n where <m_i, v_j> = delta_ij on the Y cone.
    std::vector<IntVector> cone(d.rays().begin(), d.rays().begin() + static_cast<std::ptrdiff_t>(n));
    IntMatrix B = IntMatrix::from_rows(cone);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<Rational> e(n, Rational(0));
        e[i] = 1;
        auto m = solve_rational(B, std::span<const Rational>(e));
        if (!m) fail("Y cone is singular");
        Rational c = 0;
        for (std::size_t j = 0; j < n; ++j) c += (*m)[j] * Rational(d.ray(n)[j]);
        if (c != Rational(d.a(i), -d.a(n))) fail("pullback coefficient of E_" + std::to_string(i + 1));
        if (i >= alpha && c != 0) fail("phi^* E_" + std::to_string(i + 1) + " is not D_" + std::to_string(i + 1));
        tab.pullback_exceptional.push_back(c);
    }

    // D_i|_D: lift bar v_i to u, write v_i - t_i u = c v_n; the support function of
    // D_i is 1 on v_i and 0 on v_n, so its value on u is 1 / t_i.
    for (std::size_t i = 0; i < n; ++i) {
        auto u = solve_integer(f.proj_XD, f.bar_v[i]);
        if (!u) fail("bar v_" + std::to_string(i + 1) + " has no integral lift");
        IntVector diff = d.ray(i) - f.t_i[i] * *u;
        auto c = solve_integer(IntMatrix::from_columns({d.ray(n)}, n), diff);
        if (!c) fail("v_" + std::to_string(i + 1) + " is not t_i times a lift modulo v_n");
        Rational psi = Rational(1) / Rational(f.t_i[i]);
        if (psi != Rational(1, f.t_i[i])) fail("D_" + std::to_string(i + 1) + "|_D");
        tab.to_D.push_back(psi);
    }

    // bar phi^* bar E_i: evaluate the support function of bar E_i on proj_DF(bar v_j).
    const std::size_t rf = f.rank_F();
    if (rf != n - alpha) fail("N_F has rank " + std::to_string(rf));
    if (rf > 0) {
        IntMatrix T = IntMatrix::from_rows(f.tilde_v);
        for (std::size_t i = alpha; i < n; ++i) {
            std::vector<Rational> e(rf, Rational(0));
            e[i - alpha] = 1;
            auto mu = solve_rational(T, std::span<const Rational>(e));
            if (!mu) fail("tilde v are dependent");
            for (std::size_t j = 0; j < n; ++j) {
                IntVector img = f.proj_DF.apply(f.bar_v[j]);
                Rational c = 0;
                for (std::size_t k = 0; k < rf; ++k) c += (*mu)[k] * Rational(img[k]);
                Rational expect = j == i ? Rational(f.s[i - alpha]) : Rational(0);
                if (c != expect)
                    fail("coefficient of bar D_" + std::to_string(j + 1) + " in pullback of bar E_" + std::to_string(i + 1));
                if (j == i) tab.fibre_pullback.push_back(c);
            }
        }
    }

    // E_i|_F from phi^* E_i = D_i, D_i|_D and bar phi^* bar E_i.
    for (std::size_t i = alpha; i < n; ++i) {
        Rational via_chain = tab.to_D[i] / tab.fibre_pullback[i - alpha];
        if (via_chain != Rational(1, f.s[i - alpha] * f.t_i[i])) fail("E_" + std::to_string(i + 1) + "|_F");
        tab.to_F.push_back(via_chain);
    }
    return tab;
}

}  // namespace torsod
