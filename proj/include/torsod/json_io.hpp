/**
 * JSON forms of data, fans, certificates and check reports.
 *
 * Integers that fit in 64 bits are numbers, larger ones are decimal
 * strings.  Rationals are strings "p/q" (or "p").  Objects keep insertion
 * order so output is byte-stable.
 */
#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "extraction.hpp"
#include "oracle.hpp"
#include "sod.hpp"

namespace torsod {

using Json = nlohmann::ordered_json;

/// Input that parses but does not match a schema; the message names the field path.
class SchemaError : public std::invalid_argument {
public:
    SchemaError(const std::string& path, const std::string& what)
        : std::invalid_argument(path + ": " + what), path_(path)
    {
    }
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

/// Unreadable or unwritable file.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline std::string read_text_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("cannot read " + path);
    return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << text;
    if (!out) throw IoError("cannot write " + path);
}

/// Parse with the error position reported as line and column.
inline Json parse_json(const std::string& text, const std::string& source = "<input>")
{
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw SchemaError(source + ":" + std::to_string(line) + ":" + std::to_string(col), "JSON parse error");
    }
}

inline Json integer_json(const Integer& x)
{
    if (x >= std::numeric_limits<std::int64_t>::min() && x <= std::numeric_limits<std::int64_t>::max())
        return Json(static_cast<std::int64_t>(x));
    return Json(x.str());
}

inline Json integers_json(std::span<const Integer> v)
{
    Json a = Json::array();
    for (const auto& x : v) a.push_back(integer_json(x));
    return a;
}

inline Json points_json(std::span<const std::int64_t> v)
{
    Json a = Json::array();
    for (auto x : v) a.push_back(x);
    return a;
}

inline Json rational_json(const Rational& q) { return Json(to_string(q)); }

inline Integer parse_integer(const Json& j, const std::string& path)
{
    if (j.is_number_integer()) return j.is_number_unsigned() ? Integer(j.get<std::uint64_t>()) : Integer(j.get<std::int64_t>());
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        std::size_t start = !s.empty() && (s[0] == '-' || s[0] == '+') ? 1 : 0;
        if (s.size() > start && s.find_first_not_of("0123456789", start) == std::string::npos) return Integer(s);
    }
    throw SchemaError(path, "expected an integer");
}

inline IntVector parse_integers(const Json& j, const std::string& path)
{
    if (!j.is_array()) throw SchemaError(path, "expected an array of integers");
    IntVector out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(parse_integer(j[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

inline std::int64_t parse_int64(const Json& j, const std::string& path)
{
    Integer x = parse_integer(j, path);
    if (x > oracle::coordinate_limit || x < -oracle::coordinate_limit) throw SchemaError(path, "integer out of range");
    return static_cast<std::int64_t>(x);
}

inline std::size_t parse_count(const Json& j, const std::string& path)
{
    Integer x = parse_integer(j, path);
    if (x < 0 || x > 1'000'000) throw SchemaError(path, "expected a nonnegative count");
    return static_cast<std::size_t>(x);
}

inline Rational parse_rational(const Json& j, const std::string& path)
{
    if (j.is_number_integer()) return Rational(parse_integer(j, path));
    if (j.is_string()) {
        std::string s = j.get<std::string>();
        auto slash = s.find('/');
        if (slash == std::string::npos) return Rational(parse_integer(Json(s), path));
        Integer p = parse_integer(Json(s.substr(0, slash)), path);
        Integer q = parse_integer(Json(s.substr(slash + 1)), path);
        if (q == 0) throw SchemaError(path, "zero denominator");
        return q < 0 ? Rational(Integer(-p), Integer(-q)) : Rational(p, q);
    }
    throw SchemaError(path, "expected a rational");
}

inline const Json& field(const Json& obj, const std::string& key, const std::string& path)
{
    if (!obj.is_object()) throw SchemaError(path, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) throw SchemaError(path, "missing field \"" + key + "\"");
    return *it;
}

inline void reject_unknown(const Json& obj, std::initializer_list<const char*> keys, const std::string& path)
{
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* k : keys) known = known || it.key() == k;
        if (!known) throw SchemaError(path, "unknown field \"" + it.key() + "\"");
    }
}

// Datum: {"n", "alpha", "rays", "a", "r"}

inline RawDatum raw_datum_from_json(const Json& j, const std::string& path = "$")
{
    if (!j.is_object()) throw SchemaError(path, "expected an object");
    reject_unknown(j, {"n", "alpha", "rays", "a", "r", "name"}, path);
    RawDatum raw;
    raw.n = parse_count(field(j, "n", path), path + ".n");
    raw.alpha = parse_count(field(j, "alpha", path), path + ".alpha");
    const Json& rays = field(j, "rays", path);
    if (!rays.is_array()) throw SchemaError(path + ".rays", "expected an array of integer arrays");
    for (std::size_t i = 0; i < rays.size(); ++i)
        raw.rays.push_back(parse_integers(rays[i], path + ".rays[" + std::to_string(i) + "]"));
    raw.a = parse_integers(field(j, "a", path), path + ".a");
    raw.r = parse_integers(field(j, "r", path), path + ".r");
    return raw;
}

inline Json datum_json(const RawDatum& raw)
{
    Json j;
    j["n"] = raw.n;
    j["alpha"] = raw.alpha;
    Json rays = Json::array();
    for (const auto& v : raw.rays) rays.push_back(integers_json(v));
    j["rays"] = rays;
    j["a"] = integers_json(raw.a);
    j["r"] = integers_json(raw.r);
    return j;
}

inline Json datum_json(const ExtractionDatum& d) { return datum_json(d.raw()); }

// Fan: {"lattice_rank", "rays": [{"v", "r"}], "max_cones"}

inline oracle::StackyFan fan_from_json(const Json& j, const std::string& path = "$")
{
    if (!j.is_object()) throw SchemaError(path, "expected an object");
    reject_unknown(j, {"lattice_rank", "rays", "max_cones", "name"}, path);
    oracle::StackyFan fan;
    fan.lattice_rank = parse_count(field(j, "lattice_rank", path), path + ".lattice_rank");
    const Json& rays = field(j, "rays", path);
    if (!rays.is_array()) throw SchemaError(path + ".rays", "expected an array");
    for (std::size_t i = 0; i < rays.size(); ++i) {
        std::string p = path + ".rays[" + std::to_string(i) + "]";
        if (!rays[i].is_object()) throw SchemaError(p, "expected an object with fields v and r");
        reject_unknown(rays[i], {"v", "r"}, p);
        oracle::StackyRay r;
        IntVector v = parse_integers(field(rays[i], "v", p), p + ".v");
        for (std::size_t k = 0; k < v.size(); ++k) r.v.push_back(parse_int64(integer_json(v[k]), p + ".v[" + std::to_string(k) + "]"));
        r.order = rays[i].contains("r") ? parse_int64(rays[i]["r"], p + ".r") : 1;
        fan.rays.push_back(r);
    }
    const Json& cones = field(j, "max_cones", path);
    if (!cones.is_array()) throw SchemaError(path + ".max_cones", "expected an array of index arrays");
    for (std::size_t c = 0; c < cones.size(); ++c) {
        std::string p = path + ".max_cones[" + std::to_string(c) + "]";
        if (!cones[c].is_array()) throw SchemaError(p, "expected an array of ray indices");
        std::vector<std::size_t> cone;
        for (std::size_t k = 0; k < cones[c].size(); ++k) cone.push_back(parse_count(cones[c][k], p + "[" + std::to_string(k) + "]"));
        fan.max_cones.push_back(cone);
    }
    return fan;
}

inline Json fan_json(const oracle::StackyFan& fan)
{
    Json j;
    j["lattice_rank"] = fan.lattice_rank;
    Json rays = Json::array();
    for (const auto& r : fan.rays) {
        Json o;
        o["v"] = points_json(r.v);
        o["r"] = r.order;
        rays.push_back(o);
    }
    j["rays"] = rays;
    Json cones = Json::array();
    for (const auto& c : fan.max_cones) {
        Json a = Json::array();
        for (auto i : c) a.push_back(i);
        cones.push_back(a);
    }
    j["max_cones"] = cones;
    return j;
}

// Certificate

inline Json certificate_json(const GenerationCertificate& cert)
{
    Json j;
    Json targets = Json::array();
    for (const auto& t : cert.targets) targets.push_back(integers_json(t));
    j["targets"] = targets;
    j["roots"] = cert.roots;
    Json nodes = Json::object();
    for (const auto& [key, node] : cert.nodes) {
        Json o;
        o["kind"] = to_string(node.kind);
        o["k"] = integers_json(node.k);
        o["k_last"] = integer_json(node.k_last);
        o["w"] = rational_json(node.w);
        o["children"] = node.children;
        nodes[key] = o;
    }
    j["nodes"] = nodes;
    return j;
}

inline NodeKind parse_node_kind(const Json& j, const std::string& path)
{
    if (j.is_string()) {
        std::string s = j.get<std::string>();
        if (s == "LEAF-SPAN") return NodeKind::LeafSpan;
        if (s == "LEAF-BLOCK") return NodeKind::LeafBlock;
        if (s == "KOSZUL") return NodeKind::Koszul;
    }
    throw SchemaError(path, "expected LEAF-SPAN, LEAF-BLOCK or KOSZUL");
}

inline std::vector<std::string> parse_strings(const Json& j, const std::string& path)
{
    if (!j.is_array()) throw SchemaError(path, "expected an array of strings");
    std::vector<std::string> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_string()) throw SchemaError(path + "[" + std::to_string(i) + "]", "expected a string");
        out.push_back(j[i].get<std::string>());
    }
    return out;
}

inline GenerationCertificate certificate_from_json(const Json& j, const std::string& path = "$")
{
    GenerationCertificate cert;
    const Json& targets = field(j, "targets", path);
    if (!targets.is_array()) throw SchemaError(path + ".targets", "expected an array");
    for (std::size_t i = 0; i < targets.size(); ++i)
        cert.targets.push_back(parse_integers(targets[i], path + ".targets[" + std::to_string(i) + "]"));
    cert.roots = parse_strings(field(j, "roots", path), path + ".roots");
    const Json& nodes = field(j, "nodes", path);
    if (!nodes.is_object()) throw SchemaError(path + ".nodes", "expected an object");
    for (auto it = nodes.begin(); it != nodes.end(); ++it) {
        std::string p = path + ".nodes[\"" + it.key() + "\"]";
        CertificateNode node;
        node.key = it.key();
        node.kind = parse_node_kind(field(*it, "kind", p), p + ".kind");
        node.k = parse_integers(field(*it, "k", p), p + ".k");
        node.k_last = parse_integer(field(*it, "k_last", p), p + ".k_last");
        node.w = parse_rational(field(*it, "w", p), p + ".w");
        node.children = parse_strings(field(*it, "children", p), p + ".children");
        cert.nodes[node.key] = node;
    }
    return cert;
}

// Reports

inline Json check_record_json(const CheckRecord& r)
{
    Json j;
    j["check"] = r.check;
    j["subject"] = r.subject;
    j["value"] = rational_json(r.value);
    j["lower"] = r.lower ? Json(to_string(*r.lower) + (r.lower_strict ? " <" : " <=")) : Json(nullptr);
    j["upper"] = r.upper ? Json((r.upper_strict ? "< " : "<= ") + to_string(*r.upper)) : Json(nullptr);
    j["holds"] = r.holds;
    if (!r.note.empty()) j["note"] = r.note;
    return j;
}

inline Json check_report_json(const CheckReport& rep)
{
    Json j;
    j["passed"] = rep.passed();
    j["count"] = rep.records.size();
    j["failures"] = rep.failures().size();
    Json recs = Json::array();
    for (const auto& r : rep.records) recs.push_back(check_record_json(r));
    j["records"] = recs;
    return j;
}

inline Json cohomology_json(const oracle::CohomologyVector& c)
{
    Json j;
    j["min_degree"] = c.min_degree;
    j["dims"] = points_json(c.dims);
    return j;
}

}  // namespace torsod
