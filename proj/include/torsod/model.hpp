/**
 * Complete stacky fan pairs realizing extraction data: a catalog of canned
 * models, fan loading, and recovery of the datum from a fan pair.
 *
 * A local datum (rays v_0..v_n, exceptional ray v_n) is compactified by the
 * ray c = prim(-(v_0 + ... + v_n)); Y has the cones spanned by every n-subset
 * of {v_0, ..., v_{n-1}, c} and X is the star subdivision of Y at v_n.
 */
#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "extraction.hpp"
#include "json_io.hpp"
#include "lattice.hpp"
#include "oracle.hpp"

namespace torsod {

class ModelError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct ModelPair {
    std::string name;
    oracle::StackyFan fan_X;
    oracle::StackyFan fan_Y;
    std::size_t exceptional_ray_index = 0;         ///< index of v_n in fan_X
    ExtractionDatum datum;
    std::vector<std::size_t> ray_correspondence;   ///< Y ray index -> X ray index
    std::vector<std::size_t> datum_to_x;           ///< datum index 0..n -> X ray index
    std::vector<std::size_t> datum_to_y;           ///< datum index 0..n-1 -> Y ray index

    /// X label for an (n+1)-entry datum label; other rays get 0.
    oracle::Label lift_x(std::span<const Integer> k) const
    {
        if (k.size() != datum.n() + 1) throw std::invalid_argument("lift_x: label must have n+1 entries");
        oracle::Label out(fan_X.rays.size(), 0);
        for (std::size_t i = 0; i < k.size(); ++i) out[datum_to_x[i]] = oracle::to_int64(k[i]);
        return out;
    }

    /// Y label for an n-entry datum label; other rays get 0.
    oracle::Label lift_y(std::span<const Integer> k) const
    {
        if (k.size() != datum.n()) throw std::invalid_argument("lift_y: label must have n entries");
        oracle::Label out(fan_Y.rays.size(), 0);
        for (std::size_t i = 0; i < k.size(); ++i) out[datum_to_y[i]] = oracle::to_int64(k[i]);
        return out;
    }

    /// Y rays of the face spanned by v_0..v_{alpha-1}.
    std::vector<std::size_t> face_rays_y() const
    {
        return std::vector<std::size_t>(datum_to_y.begin(), datum_to_y.begin() + static_cast<std::ptrdiff_t>(datum.alpha()));
    }
};

/// Rays sorted lexicographically, cones sorted internally and among themselves.
inline oracle::StackyFan canonical_fan(const oracle::StackyFan& fan)
{
    std::vector<std::size_t> order(fan.rays.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fan.rays[a].v < fan.rays[b].v; });
    std::vector<std::size_t> where(order.size());
    oracle::StackyFan out;
    out.lattice_rank = fan.lattice_rank;
    out.completeness_verified = fan.completeness_verified;
    for (std::size_t i = 0; i < order.size(); ++i) {
        where[order[i]] = i;
        out.rays.push_back(fan.rays[order[i]]);
    }
    for (const auto& c : fan.max_cones) {
        std::vector<std::size_t> cone;
        for (auto i : c) cone.push_back(i < where.size() ? where[i] : i);
        std::sort(cone.begin(), cone.end());
        out.max_cones.push_back(cone);
    }
    std::sort(out.max_cones.begin(), out.max_cones.end());
    return out;
}

/// Parse, validate and (on request) check completeness of a fan file.
inline oracle::StackyFan load_fan(const std::string& path, bool require_complete = false)
{
    oracle::StackyFan fan = fan_from_json(parse_json(read_text_file(path), path), "$");
    oracle::validate_fan(fan);
    if (require_complete) fan = oracle::require_complete(fan);
    return fan;
}

namespace detail {

inline std::size_t find_ray(const oracle::StackyFan& fan, const oracle::Point& v)
{
    for (std::size_t i = 0; i < fan.rays.size(); ++i)
        if (fan.rays[i].v == v) return i;
    return fan.rays.size();
}

inline std::set<std::vector<std::size_t>> cone_set(const oracle::StackyFan& fan)
{
    std::set<std::vector<std::size_t>> out;
    for (auto c : fan.max_cones) {
        std::sort(c.begin(), c.end());
        out.insert(c);
    }
    return out;
}

}  // namespace detail

struct RefinementData {
    std::vector<std::size_t> y_to_x;
    std::vector<std::size_t> face;  ///< Y rays whose cone holds the exceptional ray in its relative interior
};

/// Checks that fan_X is the star subdivision of fan_Y at the exceptional ray.
inline RefinementData check_refinement(const oracle::StackyFan& fan_X, const oracle::StackyFan& fan_Y, std::size_t exceptional)
{
    oracle::validate_fan(fan_X);
    oracle::validate_fan(fan_Y);
    if (fan_X.lattice_rank != fan_Y.lattice_rank) throw ModelError("fans live in lattices of different rank");
    if (exceptional >= fan_X.rays.size()) throw ModelError("exceptional ray index out of range");
    if (fan_X.rays.size() != fan_Y.rays.size() + 1)
        throw ModelError("not a single-ray refinement: X has " + std::to_string(fan_X.rays.size()) + " rays, Y has " +
                         std::to_string(fan_Y.rays.size()));
    RefinementData out;
    for (const auto& r : fan_Y.rays) {
        std::size_t j = detail::find_ray(fan_X, r.v);
        if (j == fan_X.rays.size() || j == exceptional)
            throw ModelError("not a single-ray refinement: Y ray " + oracle::point_string(r.v) + " missing from X");
        if (fan_X.rays[j].order != r.order) throw ModelError("ray " + oracle::point_string(r.v) + " has different orders");
        out.y_to_x.push_back(j);
    }
    const oracle::Point& e = fan_X.rays[exceptional].v;
    const IntVector ev = oracle::to_integers(e);
    // smallest Y cone containing e: the support of its coordinates in any Y cone containing it
    bool found = false;
    for (const auto& c : fan_Y.max_cones) {
        IntMatrix cols = oracle::ray_matrix(fan_Y, c, false).transpose();
        if (c.size() != fan_Y.lattice_rank) continue;
        auto lambda = solve_rational(cols, std::span<const Integer>(ev));
        if (!lambda || std::any_of(lambda->begin(), lambda->end(), [](const Rational& x) { return x < 0; })) continue;
        std::vector<std::size_t> face;
        for (std::size_t i = 0; i < c.size(); ++i)
            if ((*lambda)[i] > 0) face.push_back(c[i]);
        std::sort(face.begin(), face.end());
        out.face = face;
        found = true;
        break;
    }
    if (!found) throw ModelError("exceptional ray lies in no maximal cone of Y");
    if (out.face.size() < 2) throw ModelError("exceptional ray already spans a ray of Y");

    std::set<std::vector<std::size_t>> expected;
    for (auto c : detail::cone_set(fan_Y)) {
        bool contains = std::includes(c.begin(), c.end(), out.face.begin(), out.face.end());
        std::vector<std::size_t> mapped;
        for (auto i : c) mapped.push_back(out.y_to_x[i]);
        if (!contains) {
            std::sort(mapped.begin(), mapped.end());
            expected.insert(mapped);
            continue;
        }
        for (auto drop : out.face) {
            std::vector<std::size_t> sub;
            for (auto i : c)
                if (i != drop) sub.push_back(out.y_to_x[i]);
            sub.push_back(exceptional);
            std::sort(sub.begin(), sub.end());
            expected.insert(sub);
        }
    }
    if (expected != detail::cone_set(fan_X)) throw ModelError("fan_X is not the star subdivision of fan_Y at the exceptional ray");
    return out;
}

/**
 * The datum of the subdivided cone.  The Y cone is the last maximal cone
 * (in sorted order) containing the face of the exceptional ray; indices are
 * the positive rays, then the remaining cone rays, each in fan order.
 */
inline ExtractionDatum datum_from_fans(const oracle::StackyFan& fan_X, const oracle::StackyFan& fan_Y, std::size_t exceptional)
{
    RefinementData ref = check_refinement(fan_X, fan_Y, exceptional);
    const std::size_t n = fan_Y.lattice_rank;
    std::vector<std::size_t> sigma;
    for (const auto& c : detail::cone_set(fan_Y))
        if (std::includes(c.begin(), c.end(), ref.face.begin(), ref.face.end())) sigma = c;
    if (sigma.size() != n) throw ModelError("the subdivided cone is not full-dimensional");

    IntMatrix cols = oracle::ray_matrix(fan_Y, sigma, false).transpose();
    IntVector ev = oracle::to_integers(fan_X.rays[exceptional].v);
    auto lambda = solve_rational(cols, std::span<const Integer>(ev));
    if (!lambda) throw ModelError("relation not unique: cone rays are dependent");
    Integer den = 1;
    for (const auto& x : *lambda) den = lcm(den, boost::multiprecision::denominator(x));
    IntVector coeff;
    for (const auto& x : *lambda) coeff.push_back(boost::multiprecision::numerator(x) * (den / boost::multiprecision::denominator(x)));
    coeff.push_back(-den);
    Integer g = gcd(coeff);
    for (auto& x : coeff) x /= g;

    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < n; ++i)
        if (coeff[i] > 0) idx.push_back(i);
    const std::size_t alpha = idx.size();
    for (std::size_t i = 0; i < n; ++i)
        if (coeff[i] == 0) idx.push_back(i);
    if (idx.size() != n) throw ModelError("relation has negative coefficients on the cone rays");

    RawDatum raw;
    raw.n = n;
    raw.alpha = alpha;
    for (auto i : idx) {
        raw.rays.push_back(oracle::to_integers(fan_Y.rays[sigma[i]].v));
        raw.a.push_back(coeff[i]);
        raw.r.emplace_back(fan_Y.rays[sigma[i]].order);
    }
    raw.rays.push_back(ev);
    raw.a.push_back(coeff[n]);
    raw.r.emplace_back(fan_X.rays[exceptional].order);
    return validate(raw);
}

/// Assemble a pair from fans and a datum whose rays occur in them.
inline ModelPair make_model(std::string name, oracle::StackyFan fan_X, oracle::StackyFan fan_Y, std::size_t exceptional,
                            const ExtractionDatum& datum)
{
    RefinementData ref = check_refinement(fan_X, fan_Y, exceptional);
    fan_X = oracle::require_complete(fan_X);
    fan_Y = oracle::require_complete(fan_Y);
    ModelPair m{std::move(name), fan_X, fan_Y, exceptional, datum, ref.y_to_x, {}, {}};
    for (std::size_t i = 0; i <= datum.n(); ++i) {
        oracle::Point v = oracle::to_point(datum.ray(i));
        if (i < datum.n()) {
            std::size_t j = detail::find_ray(m.fan_Y, v);
            if (j == m.fan_Y.rays.size()) throw ModelError("datum ray " + oracle::point_string(v) + " is not a ray of Y");
            if (Integer(m.fan_Y.rays[j].order) != datum.r(i)) throw ModelError("datum order differs from the fan");
            m.datum_to_y.push_back(j);
            m.datum_to_x.push_back(ref.y_to_x[j]);
        } else {
            if (m.fan_X.rays[exceptional].v != v) throw ModelError("datum exceptional ray differs from the fan");
            m.datum_to_x.push_back(exceptional);
        }
    }
    return m;
}

inline ModelPair model_from_fans(std::string name, const oracle::StackyFan& fan_X, const oracle::StackyFan& fan_Y,
                                 std::size_t exceptional)
{
    return make_model(std::move(name), fan_X, fan_Y, exceptional, datum_from_fans(fan_X, fan_Y, exceptional));
}

struct CatalogEntry {
    std::string name;
    std::string description;
    RawDatum datum;
};

inline const std::vector<CatalogEntry>& catalog()
{
    static const std::vector<CatalogEntry> entries = {
        {"a1-half", "A1 point with orders 2 on both sides, blown up at (1,1); Extraction, sigma = -1",
         {2, 2, {{1, 0}, {1, 2}, {1, 1}}, {1, 1, -2}, {2, 2, 1}}},
        {"a1-crepant", "the A1 blowup with all orders 1; LogCrepant, sigma = 0",
         {2, 2, {{1, 0}, {1, 2}, {1, 1}}, {1, 1, -2}, {1, 1, 1}}},
        {"smooth-blowup", "blowup of a smooth point of P2; Contraction, sigma = 1",
         {2, 2, {{1, 0}, {0, 1}, {1, 1}}, {1, 1, -1}, {1, 1, 1}}},
        {"a2-third", "cone <(1,0),(1,3)> with orders 3, blown up at (1,1); Extraction, sigma = -2",
         {2, 2, {{1, 0}, {1, 3}, {1, 1}}, {2, 1, -3}, {3, 3, 1}}},
        {"a1-half-x-line", "a1-half times a line, rank 3 with a one-dimensional base; Extraction, sigma = -1",
         {3, 2, {{1, 0, 0}, {1, 2, 0}, {0, 0, 1}, {1, 1, 0}}, {1, 1, 0, -2}, {2, 2, 1, 1}}},
    };
    return entries;
}

inline std::vector<std::string> catalog_names()
{
    std::vector<std::string> out;
    for (const auto& e : catalog()) out.push_back(e.name);
    return out;
}

/// The same datum with positive rays, then zero rays, each sorted lexicographically.
inline ExtractionDatum canonical_datum(const ExtractionDatum& d)
{
    std::vector<std::size_t> pos, zero;
    for (std::size_t i = 0; i < d.n(); ++i) (d.a(i) > 0 ? pos : zero).push_back(i);
    auto by_ray = [&](std::size_t a, std::size_t b) { return d.ray(a) < d.ray(b); };
    std::sort(pos.begin(), pos.end(), by_ray);
    std::sort(zero.begin(), zero.end(), by_ray);
    RawDatum raw;
    raw.n = d.n();
    raw.alpha = pos.size();
    pos.insert(pos.end(), zero.begin(), zero.end());
    pos.push_back(d.n());
    for (auto i : pos) {
        raw.rays.push_back(d.ray(i));
        raw.a.push_back(d.a(i));
        raw.r.push_back(d.r(i));
    }
    return validate(raw);
}

/// Compactified fans for a local datum, in canonical ray order.
inline std::pair<oracle::StackyFan, oracle::StackyFan> compactify(const ExtractionDatum& d, std::size_t& exceptional)
{
    const std::size_t n = d.n();
    IntVector s(n, 0);
    for (std::size_t i = 0; i <= n; ++i) s = s + d.ray(i);
    IntVector c = primitivize(IntVector(Integer(-1) * s)).first;

    oracle::StackyFan Y;
    Y.lattice_rank = n;
    for (std::size_t i = 0; i < n; ++i) Y.rays.push_back({oracle::to_point(d.ray(i)), oracle::to_int64(d.r(i))});
    Y.rays.push_back({oracle::to_point(c), 1});
    for (std::size_t skip = 0; skip <= n; ++skip) {
        std::vector<std::size_t> cone;
        for (std::size_t i = 0; i <= n; ++i)
            if (i != skip) cone.push_back(i);
        Y.max_cones.push_back(cone);
    }

    oracle::StackyFan X;
    X.lattice_rank = n;
    X.rays = Y.rays;
    X.rays.push_back({oracle::to_point(d.ray(n)), oracle::to_int64(d.r(n))});
    const std::size_t e = n + 1;
    for (const auto& cone : Y.max_cones) {
        bool contains = true;
        for (std::size_t i = 0; i < d.alpha(); ++i) contains = contains && std::count(cone.begin(), cone.end(), i);
        if (!contains) {
            X.max_cones.push_back(cone);
            continue;
        }
        for (std::size_t drop = 0; drop < d.alpha(); ++drop) {
            std::vector<std::size_t> sub;
            for (auto i : cone)
                if (i != drop) sub.push_back(i);
            sub.push_back(e);
            X.max_cones.push_back(sub);
        }
    }
    oracle::StackyFan cx = canonical_fan(X), cy = canonical_fan(Y);
    exceptional = detail::find_ray(cx, oracle::to_point(d.ray(n)));
    return {cx, cy};
}

inline ModelPair model_from_datum(std::string name, const ExtractionDatum& d)
{
    ExtractionDatum cd = canonical_datum(d);
    std::size_t e = 0;
    auto [X, Y] = compactify(cd, e);
    return make_model(std::move(name), X, Y, e, cd);
}

inline ModelPair canned_example(const std::string& name)
{
    for (const auto& e : catalog())
        if (e.name == name) return model_from_datum(name, validate(e.datum));
    std::string known;
    for (const auto& n : catalog_names()) known += (known.empty() ? "" : ", ") + n;
    throw ModelError("unknown model \"" + name + "\" (catalog: " + known + ")");
}

inline Json model_json(const ModelPair& m)
{
    Json j;
    j["name"] = m.name;
    j["fan_X"] = fan_json(m.fan_X);
    j["fan_Y"] = fan_json(m.fan_Y);
    j["exceptional_ray_index"] = m.exceptional_ray_index;
    j["datum"] = datum_json(m.datum);
    j["ray_correspondence"] = m.ray_correspondence;
    return j;
}

inline ModelPair model_from_json(const Json& j, const std::string& path = "$")
{
    std::string name = j.contains("name") && j["name"].is_string() ? j["name"].get<std::string>() : "model";
    oracle::StackyFan X = fan_from_json(field(j, "fan_X", path), path + ".fan_X");
    oracle::StackyFan Y = fan_from_json(field(j, "fan_Y", path), path + ".fan_Y");
    std::size_t e = parse_count(field(j, "exceptional_ray_index", path), path + ".exceptional_ray_index");
    if (j.contains("datum")) return make_model(name, X, Y, e, validate(raw_datum_from_json(j["datum"], path + ".datum")));
    return model_from_fans(name, X, Y, e);
}

}  // namespace torsod
