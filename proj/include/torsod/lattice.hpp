/**
 * Exact integer lattice arithmetic: Smith normal form, primitive vectors,
 * quotient lattices and cokernels of integer matrices.
 *
 * Every quantity in this header is an arbitrary-precision integer or
 * rational.  Floating point is never used.
 */
#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace torsod {

using Integer = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;
using IntVector = std::vector<Integer>;

inline Integer abs_value(const Integer& x) { return x < 0 ? Integer(-x) : x; }

inline Integer gcd(const Integer& a, const Integer& b)
{
    Integer x = abs_value(a), y = abs_value(b);
    while (y != 0) {
        Integer r = x % y;
        x = std::move(y);
        y = std::move(r);
    }
    return x;
}

inline Integer gcd(std::span<const Integer> v)
{
    Integer g = 0;
    for (const auto& x : v) g = gcd(g, x);
    return g;
}

inline Integer lcm(const Integer& a, const Integer& b)
{
    if (a == 0 || b == 0) return 0;
    return abs_value(a / gcd(a, b) * b);
}

/// Largest integer not exceeding q.
inline Integer floor(const Rational& q)
{
    Integer n = boost::multiprecision::numerator(q);
    Integer d = boost::multiprecision::denominator(q);  // always positive
    Integer f = n / d;
    if (n % d != 0 && n < 0) f -= 1;
    return f;
}

/// Smallest integer not below q.
inline Integer ceil(const Rational& q)
{
    return -floor(Rational(-q));
}

inline bool is_integer(const Rational& q)
{
    return boost::multiprecision::denominator(q) == 1;
}

inline std::string to_string(const Integer& x) { return x.str(); }

inline std::string to_string(const Rational& q)
{
    std::ostringstream os;
    os << q;
    return os.str();
}

inline std::string to_string(std::span<const Integer> v)
{
    std::string s = "(";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ",";
        s += v[i].str();
    }
    return s + ")";
}

inline Integer dot(std::span<const Integer> a, std::span<const Integer> b)
{
    if (a.size() != b.size()) throw std::invalid_argument("dot: length mismatch");
    Integer s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline IntVector operator-(const IntVector& a, const IntVector& b)
{
    if (a.size() != b.size()) throw std::invalid_argument("vector difference: length mismatch");
    IntVector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

inline IntVector operator+(const IntVector& a, const IntVector& b)
{
    if (a.size() != b.size()) throw std::invalid_argument("vector sum: length mismatch");
    IntVector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
    return out;
}

inline IntVector operator*(const Integer& c, const IntVector& a)
{
    IntVector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = c * a[i];
    return out;
}

inline bool is_zero(std::span<const Integer> v)
{
    return std::all_of(v.begin(), v.end(), [](const Integer& x) { return x == 0; });
}

/// Dense row-major matrix of exact integers.
class IntMatrix {
public:
    IntMatrix() = default;
    IntMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

    static IntMatrix identity(std::size_t n)
    {
        IntMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1;
        return m;
    }

    /// Builds a matrix from row vectors.  `cols` is used only when `rows` is empty.
    static IntMatrix from_rows(const std::vector<IntVector>& rows, std::size_t cols = 0)
    {
        if (!rows.empty()) cols = rows.front().size();
        IntMatrix m(rows.size(), cols);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != cols) throw std::invalid_argument("IntMatrix: ragged rows");
            for (std::size_t j = 0; j < cols; ++j) m(i, j) = rows[i][j];
        }
        return m;
    }

    /// Builds a matrix whose columns are the given vectors.
    static IntMatrix from_columns(const std::vector<IntVector>& cols, std::size_t rows = 0)
    {
        return from_rows(cols, rows).transpose();
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    Integer& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    const Integer& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    IntVector row(std::size_t i) const
    {
        return IntVector(data_.begin() + static_cast<std::ptrdiff_t>(i * cols_),
                         data_.begin() + static_cast<std::ptrdiff_t>((i + 1) * cols_));
    }

    IntVector col(std::size_t j) const
    {
        IntVector c(rows_);
        for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
        return c;
    }

    IntMatrix transpose() const
    {
        IntMatrix t(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    IntVector apply(std::span<const Integer> x) const
    {
        if (x.size() != cols_) throw std::invalid_argument("IntMatrix::apply: length mismatch");
        IntVector y(rows_);
        for (std::size_t i = 0; i < rows_; ++i) {
            Integer s = 0;
            for (std::size_t j = 0; j < cols_; ++j) s += (*this)(i, j) * x[j];
            y[i] = std::move(s);
        }
        return y;
    }

    friend IntMatrix operator*(const IntMatrix& a, const IntMatrix& b)
    {
        if (a.cols_ != b.rows_) throw std::invalid_argument("IntMatrix product: shape mismatch");
        IntMatrix c(a.rows_, b.cols_);
        for (std::size_t i = 0; i < a.rows_; ++i)
            for (std::size_t k = 0; k < a.cols_; ++k) {
                if (a(i, k) == 0) continue;
                for (std::size_t j = 0; j < b.cols_; ++j) c(i, j) += a(i, k) * b(k, j);
            }
        return c;
    }

    bool operator==(const IntMatrix&) const = default;

    void swap_rows(std::size_t a, std::size_t b)
    {
        if (a == b) return;
        for (std::size_t j = 0; j < cols_; ++j) std::swap((*this)(a, j), (*this)(b, j));
    }

    void swap_cols(std::size_t a, std::size_t b)
    {
        if (a == b) return;
        for (std::size_t i = 0; i < rows_; ++i) std::swap((*this)(i, a), (*this)(i, b));
    }

    /// row[dst] += c * row[src]
    void add_row(std::size_t dst, std::size_t src, const Integer& c)
    {
        if (c == 0) return;
        for (std::size_t j = 0; j < cols_; ++j) (*this)(dst, j) += c * (*this)(src, j);
    }

    /// col[dst] += c * col[src]
    void add_col(std::size_t dst, std::size_t src, const Integer& c)
    {
        if (c == 0) return;
        for (std::size_t i = 0; i < rows_; ++i) (*this)(i, dst) += c * (*this)(i, src);
    }

    void negate_row(std::size_t i)
    {
        for (std::size_t j = 0; j < cols_; ++j) (*this)(i, j) = -(*this)(i, j);
    }

    void negate_col(std::size_t j)
    {
        for (std::size_t i = 0; i < rows_; ++i) (*this)(i, j) = -(*this)(i, j);
    }

    std::string str() const
    {
        std::string s = "[";
        for (std::size_t i = 0; i < rows_; ++i) {
            if (i) s += ",";
            s += to_string(row(i));
        }
        return s + "]";
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<Integer> data_;
};

/**
 * Smith normal form U * M * V = D together with the inverses of the
 * unimodular transforms.  `rank` nonzero diagonal entries, positive and
 * dividing in sequence.
 */
struct SmithForm {
    IntMatrix U, D, V;
    IntMatrix U_inv, V_inv;
    std::size_t rank = 0;

    IntVector diagonal() const
    {
        IntVector d(rank);
        for (std::size_t i = 0; i < rank; ++i) d[i] = D(i, i);
        return d;
    }
};

namespace detail {

// Smallest nonzero |A(i,j)| with i,j >= t; row-major scan keeps the first
// occurrence on ties.
inline std::optional<std::pair<std::size_t, std::size_t>> snf_pivot(const IntMatrix& A, std::size_t t)
{
    std::optional<std::pair<std::size_t, std::size_t>> best;
    Integer best_abs = 0;
    for (std::size_t i = t; i < A.rows(); ++i)
        for (std::size_t j = t; j < A.cols(); ++j) {
            if (A(i, j) == 0) continue;
            Integer a = abs_value(A(i, j));
            if (!best || a < best_abs) {
                best = {i, j};
                best_abs = std::move(a);
            }
        }
    return best;
}

}  // namespace detail

/// Smith normal form with the deterministic pivot rule described above.
inline SmithForm snf(const IntMatrix& M)
{
    const std::size_t m = M.rows(), n = M.cols();
    SmithForm S{IntMatrix::identity(m), M, IntMatrix::identity(n), IntMatrix::identity(m),
                IntMatrix::identity(n), 0};
    IntMatrix& A = S.D;

    auto swap_rows = [&](std::size_t a, std::size_t b) {
        A.swap_rows(a, b);
        S.U.swap_rows(a, b);
        S.U_inv.swap_cols(a, b);
    };
    auto swap_cols = [&](std::size_t a, std::size_t b) {
        A.swap_cols(a, b);
        S.V.swap_cols(a, b);
        S.V_inv.swap_rows(a, b);
    };
    // row[dst] += c * row[src]
    auto add_row = [&](std::size_t dst, std::size_t src, const Integer& c) {
        A.add_row(dst, src, c);
        S.U.add_row(dst, src, c);
        S.U_inv.add_col(src, dst, -c);
    };
    // col[dst] += c * col[src]
    auto add_col = [&](std::size_t dst, std::size_t src, const Integer& c) {
        A.add_col(dst, src, c);
        S.V.add_col(dst, src, c);
        S.V_inv.add_row(src, dst, -c);
    };

    std::size_t t = 0;
    for (; t < std::min(m, n); ++t) {
        for (;;) {
            auto piv = detail::snf_pivot(A, t);
            if (!piv) break;
            swap_rows(t, piv->first);
            swap_cols(t, piv->second);

            bool clean = true;
            for (std::size_t i = t + 1; i < m; ++i) {
                if (A(i, t) == 0) continue;
                Integer q = A(i, t) / A(t, t);
                add_row(i, t, -q);
                if (A(i, t) != 0) clean = false;
            }
            for (std::size_t j = t + 1; j < n; ++j) {
                if (A(t, j) == 0) continue;
                Integer q = A(t, j) / A(t, t);
                add_col(j, t, -q);
                if (A(t, j) != 0) clean = false;
            }
            if (!clean) continue;

            // Pivot must divide the remaining block.
            std::optional<std::size_t> bad_row;
            for (std::size_t i = t + 1; i < m && !bad_row; ++i)
                for (std::size_t j = t + 1; j < n; ++j)
                    if (A(i, j) % A(t, t) != 0) {
                        bad_row = i;
                        break;
                    }
            if (bad_row) {
                add_row(t, *bad_row, 1);
                continue;
            }
            break;
        }
        if (A(t, t) == 0) break;
        if (A(t, t) < 0) {
            A.negate_row(t);
            S.U.negate_row(t);
            S.U_inv.negate_col(t);
        }
    }
    S.rank = t;
    return S;
}

/// Decomposes v = c * p with p primitive and c > 0.
inline std::pair<IntVector, Integer> primitivize(std::span<const Integer> v)
{
    Integer g = gcd(v);
    if (g == 0) throw std::invalid_argument("primitivize: zero vector");
    IntVector p(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) p[i] = v[i] / g;
    return {p, g};
}

inline bool is_primitive(std::span<const Integer> v) { return gcd(v) == 1; }

/// Rank over Q.
inline std::size_t rank(const IntMatrix& M) { return snf(M).rank; }

struct QuotientProjection {
    IntMatrix projection;  ///< target_rank x N, surjective onto Z^target_rank
    std::size_t target_rank = 0;
};

/**
 * Surjection Z^N -> Z^r whose kernel is the span of `kernel_generators`
 * (saturate = false; the span must then already be saturated) or the
 * saturation of that span (saturate = true).  Each projection row is
 * normalized so that its first nonzero entry is positive.
 */
inline QuotientProjection quotient_project(std::size_t N, const std::vector<IntVector>& kernel_generators,
                                           bool saturate)
{
    for (const auto& g : kernel_generators)
        if (g.size() != N) throw std::invalid_argument("quotient_project: generator length mismatch");
    if (kernel_generators.empty()) return {IntMatrix::identity(N), N};

    SmithForm S = snf(IntMatrix::from_columns(kernel_generators, N));
    if (!saturate)
        for (std::size_t i = 0; i < S.rank; ++i)
            if (S.D(i, i) != 1)
                throw std::invalid_argument("quotient_project: kernel is not saturated, quotient has torsion");

    QuotientProjection q{IntMatrix(N - S.rank, N), N - S.rank};
    for (std::size_t i = S.rank; i < N; ++i) {
        IntVector row = S.U.row(i);
        auto first = std::find_if(row.begin(), row.end(), [](const Integer& x) { return x != 0; });
        const bool flip = first != row.end() && *first < 0;
        for (std::size_t j = 0; j < N; ++j) q.projection(i - S.rank, j) = flip ? Integer(-row[j]) : row[j];
    }
    return q;
}

/**
 * Finitely generated abelian group Z^m / (column span of M), with a
 * canonical representative for every coset.
 *
 * In SNF coordinates y = U x the relations are d_i Z e_i (i < rank); the
 * representative reduces y_i into [0, d_i) and keeps the free coordinates.
 */
class AbelianGroupDesc {
public:
    explicit AbelianGroupDesc(const IntMatrix& M) : ambient_(M.rows()), smith_(snf(M)) {}

    std::size_t ambient_rank() const { return ambient_; }
    std::size_t free_rank() const { return ambient_ - smith_.rank; }

    /// Diagonal entries >= 2, dividing in sequence.
    IntVector invariant_factors() const
    {
        IntVector f;
        for (std::size_t i = 0; i < smith_.rank; ++i)
            if (smith_.D(i, i) != 1) f.push_back(smith_.D(i, i));
        return f;
    }

    /// Order of the torsion subgroup.
    Integer torsion_order() const
    {
        Integer o = 1;
        for (const auto& d : invariant_factors()) o *= d;
        return o;
    }

    /// Coordinates in Z/d_1 x ... x Z/d_s x Z^f: torsion part first (reduced), then free part.
    IntVector coordinates(std::span<const Integer> x) const
    {
        check(x);
        IntVector y = smith_.U.apply(x);
        IntVector c;
        for (std::size_t i = 0; i < smith_.rank; ++i) {
            const Integer& d = smith_.D(i, i);
            if (d == 1) continue;
            Integer r = y[i] % d;
            if (r < 0) r += d;
            c.push_back(r);
        }
        for (std::size_t i = smith_.rank; i < ambient_; ++i) c.push_back(y[i]);
        return c;
    }

    /// Inverse of coordinates() on canonical representatives.
    IntVector from_coordinates(std::span<const Integer> c) const
    {
        const std::size_t s = invariant_factors().size();
        if (c.size() != s + free_rank()) throw std::invalid_argument("from_coordinates: length mismatch");
        IntVector y(ambient_);
        std::size_t k = 0;
        for (std::size_t i = 0; i < smith_.rank; ++i)
            y[i] = smith_.D(i, i) == 1 ? Integer(0) : c[k++];
        for (std::size_t i = smith_.rank; i < ambient_; ++i) y[i] = c[k++];
        return smith_.U_inv.apply(y);
    }

    IntVector reduce(std::span<const Integer> x) const { return from_coordinates(coordinates(x)); }

    bool is_trivial_class(std::span<const Integer> x) const { return is_zero(coordinates(x)); }

    bool same_class(std::span<const Integer> x, std::span<const Integer> y) const
    {
        check(x);
        check(y);
        IntVector d(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) d[i] = x[i] - y[i];
        return is_trivial_class(d);
    }

    /// All torsion coordinate tuples, lexicographic.
    std::vector<IntVector> torsion_tuples() const
    {
        IntVector f = invariant_factors();
        std::vector<IntVector> out{IntVector(f.size())};
        for (std::size_t i = f.size(); i-- > 0;) {
            std::vector<IntVector> next;
            for (Integer v = 0; v < f[i]; ++v)
                for (const auto& t : out) {
                    IntVector u = t;
                    u[i] = v;
                    next.push_back(std::move(u));
                }
            out = std::move(next);
        }
        std::sort(out.begin(), out.end());
        return out;
    }

    const SmithForm& smith() const { return smith_; }

private:
    void check(std::span<const Integer> x) const
    {
        if (x.size() != ambient_) throw std::invalid_argument("AbelianGroupDesc: length mismatch");
    }

    std::size_t ambient_;
    SmithForm smith_;
};

/// Cokernel of the column span of M.
inline AbelianGroupDesc cokernel(const IntMatrix& M) { return AbelianGroupDesc(M); }

/// Integer solution of M x = b if one exists.
inline std::optional<IntVector> solve_integer(const IntMatrix& M, std::span<const Integer> b)
{
    if (b.size() != M.rows()) throw std::invalid_argument("solve_integer: length mismatch");
    SmithForm S = snf(M);
    IntVector y = S.U.apply(b);
    IntVector z(M.cols());
    for (std::size_t i = 0; i < M.rows(); ++i) {
        if (i < S.rank) {
            if (y[i] % S.D(i, i) != 0) return std::nullopt;
            z[i] = y[i] / S.D(i, i);
        } else if (y[i] != 0) {
            return std::nullopt;
        }
    }
    return S.V.apply(z);
}

/// Unique rational solution of the square system A x = b, or nullopt if A is singular.
inline std::optional<std::vector<Rational>> solve_rational(const IntMatrix& A, std::span<const Rational> b)
{
    const std::size_t n = A.rows();
    if (A.cols() != n || b.size() != n) throw std::invalid_argument("solve_rational: shape mismatch");
    std::vector<std::vector<Rational>> m(n, std::vector<Rational>(n + 1));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) m[i][j] = Rational(A(i, j));
        m[i][n] = b[i];
    }
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t p = c;
        while (p < n && m[p][c] == 0) ++p;
        if (p == n) return std::nullopt;
        std::swap(m[p], m[c]);
        for (std::size_t i = 0; i < n; ++i) {
            if (i == c || m[i][c] == 0) continue;
            Rational f = m[i][c] / m[c][c];
            for (std::size_t j = c; j <= n; ++j) m[i][j] -= f * m[c][j];
        }
    }
    std::vector<Rational> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = m[i][n] / m[i][i];
    return x;
}

inline std::optional<std::vector<Rational>> solve_rational(const IntMatrix& A, std::span<const Integer> b)
{
    std::vector<Rational> q(b.begin(), b.end());
    return solve_rational(A, std::span<const Rational>(q));
}

/// Determinant of a square matrix (fraction-free elimination).
inline Integer determinant(const IntMatrix& M)
{
    const std::size_t n = M.rows();
    if (M.cols() != n) throw std::invalid_argument("determinant: matrix is not square");
    if (n == 0) return 1;
    IntMatrix A = M;
    Integer prev = 1;
    int sign = 1;
    for (std::size_t k = 0; k + 1 < n; ++k) {
        if (A(k, k) == 0) {
            std::size_t p = k + 1;
            while (p < n && A(p, k) == 0) ++p;
            if (p == n) return 0;
            A.swap_rows(k, p);
            sign = -sign;
        }
        for (std::size_t i = k + 1; i < n; ++i)
            for (std::size_t j = k + 1; j < n; ++j) A(i, j) = (A(i, j) * A(k, k) - A(i, k) * A(k, j)) / prev;
        prev = A(k, k);
    }
    return sign * A(n - 1, n - 1);
}

}  // namespace torsod
