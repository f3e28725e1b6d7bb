/**
 * Command implementations behind the torsod CLI.  Each command builds one
 * report tree; JSON and markdown are both rendered from it.
 */
#pragma once

#include <cstdint>
#include <filesystem>
#include <sstream>
#include <string>

#include "extraction.hpp"
#include "json_io.hpp"
#include "model.hpp"
#include "oracle.hpp"
#include "sod.hpp"
#include "verify.hpp"

namespace torsod::cli {

inline constexpr const char* tool_version = "1.0.0";

enum ExitCode : int { Pass = 0, Mismatch = 1, InvalidInput = 2, IoFailure = 3 };

struct CommandResult {
    int exit_code = Pass;
    Json report;
    std::string summary;  ///< human lines for stdout (or stderr on failure)
};

/// FNV-1a, 64 bit, as 16 hex digits.
inline std::string fnv1a_digest(std::string_view bytes)
{
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << h;
    return os.str();
}

inline Json report_header(const std::string& command, const std::string& source, std::string_view bytes)
{
    Json j;
    j["tool"] = "torsod";
    j["version"] = tool_version;
    j["command"] = command;
    j["input"] = {{"source", source}, {"digest", "fnv1a64:" + fnv1a_digest(bytes)}};
    return j;
}

inline const char* status_name(int code)
{
    switch (code) {
        case Pass: return "pass";
        case Mismatch: return "mismatch";
        case InvalidInput: return "invalid-input";
        case IoFailure: return "io-error";
    }
    return "unknown";
}

inline CommandResult finish(Json report, int code, std::string summary)
{
    report["status"] = status_name(code);
    return {code, std::move(report), std::move(summary)};
}

inline CommandResult failure(Json report, int code, const std::string& message)
{
    report["error"] = message;
    return finish(std::move(report), code, "error: " + message);
}

// ---------------------------------------------------------------------------
// Markdown rendering of a report tree

namespace detail {

inline std::string md_scalar(const Json& v)
{
    if (v.is_string()) return v.get<std::string>();
    return v.dump();
}

inline bool is_flat(const Json& v)
{
    if (v.is_primitive()) return true;
    if (!v.is_array()) return false;
    if (std::all_of(v.begin(), v.end(), [](const Json& e) { return e.is_primitive(); })) return true;
    return v.dump().size() <= 80 && std::all_of(v.begin(), v.end(), [](const Json& e) { return is_flat(e); });
}

inline std::string md_cell(const Json& v)
{
    std::string s;
    if (v.is_primitive())
        s = md_scalar(v);
    else if (is_flat(v)) {
        for (const auto& e : v) s += (s.empty() ? "" : ", ") + md_cell(e);
        s = "[" + s + "]";
    } else
        s = v.dump();
    std::string out;
    for (char c : s) out += c == '|' ? std::string("\\|") : std::string(1, c);
    return out;
}

inline bool is_table(const Json& v)
{
    return !v.empty() && (v.is_array() || v.is_object()) &&
           std::all_of(v.begin(), v.end(), [](const Json& e) { return e.is_object(); });
}

/// Rows of an array, or of an object keyed by name (the key becomes the first column).
inline void md_table(std::ostringstream& os, const Json& rows, std::size_t max_rows)
{
    const bool keyed = rows.is_object();
    std::vector<std::string> cols;
    if (keyed) cols.push_back("key");
    for (const auto& r : rows)
        for (const auto& [k, _] : r.items())
            if (std::find(cols.begin(), cols.end(), k) == cols.end()) cols.push_back(k);
    os << "|";
    for (const auto& c : cols) os << " " << c << " |";
    os << "\n|";
    for (std::size_t i = 0; i < cols.size(); ++i) os << " --- |";
    os << "\n";
    std::size_t shown = 0;
    for (const auto& [key, r] : rows.items()) {
        if (shown++ == max_rows) break;
        os << "|";
        for (const auto& c : cols) {
            if (keyed && c == "key" && !r.contains("key"))
                os << " " << md_cell(Json(key)) << " |";
            else
                os << " " << (r.contains(c) ? md_cell(r[c]) : "") << " |";
        }
        os << "\n";
    }
    if (rows.size() > max_rows) os << "\n(" << rows.size() - max_rows << " more rows in the JSON report)\n";
    os << "\n";
}

inline void md_list(std::ostringstream& os, const Json& items, std::size_t max_rows)
{
    std::size_t shown = 0;
    for (const auto& e : items) {
        if (shown++ == max_rows) break;
        os << "- " << md_cell(e) << "\n";
    }
    if (items.size() > max_rows) os << "- (" << items.size() - max_rows << " more in the JSON report)\n";
    os << "\n";
}

inline void md_node(std::ostringstream& os, const std::string& title, const Json& v, int level, std::size_t max_rows)
{
    os << std::string(static_cast<std::size_t>(std::min(level, 6)), '#') << " " << title << "\n\n";
    if (is_table(v)) {
        md_table(os, v, max_rows);
        return;
    }
    if (v.is_array()) {
        if (v.empty())
            os << "(none)\n\n";
        else
            md_list(os, v, max_rows);
        return;
    }
    if (!v.is_object()) {
        os << md_cell(v) << "\n\n";
        return;
    }
    bool bullets = false;
    for (const auto& [k, e] : v.items())
        if (is_flat(e) || (e.is_array() && e.empty())) {
            os << "- " << k << ": " << (e.empty() && e.is_array() ? "(none)" : md_cell(e)) << "\n";
            bullets = true;
        }
    if (bullets) os << "\n";
    for (const auto& [k, e] : v.items())
        if (!(is_flat(e) || (e.is_array() && e.empty()))) md_node(os, k, e, level + 1, max_rows);
}

}  // namespace detail

/// Markdown view of a report; `seconds` < 0 omits the timing line.
inline std::string render_markdown(const Json& report, double seconds = -1, std::size_t max_rows = 200)
{
    std::ostringstream os;
    std::string cmd = report.contains("command") ? report["command"].get<std::string>() : "report";
    detail::md_node(os, "torsod " + cmd, report, 1, max_rows);
    if (seconds >= 0) {
        std::ostringstream t;
        t.precision(3);
        t << std::fixed << seconds;
        os << "---\n\nelapsed: " << t.str() << " s\n";
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// Shared JSON fragments

inline Json block_json(const BlockLabel& b)
{
    return {{"key", block_key(b.k)}, {"k", integers_json(b.k)}, {"k_last", integer_json(b.witness)}, {"w", rational_json(b.w)}};
}

inline Json group_json(const AbelianGroupDesc& g)
{
    return {{"free_rank", g.free_rank()}, {"invariant_factors", integers_json(g.invariant_factors())}};
}

inline Json oracle_report_json(const verify::OracleReport& rep)
{
    Json checks = Json::array();
    for (const auto& s : rep.summary()) checks.push_back({{"check", s.check}, {"total", s.total}, {"failed", s.failed}});
    Json fails = Json::array();
    for (const auto& r : rep.failures())
        fails.push_back({{"check", r.check}, {"subject", r.subject}, {"expected", r.expected}, {"observed", r.observed}});
    return {{"passed", rep.passed()}, {"checks", checks}, {"failures", fails}};
}

inline std::string oracle_summary_lines(const verify::OracleReport& rep)
{
    std::string out;
    for (const auto& s : rep.summary())
        out += "  " + s.check + ": " + std::to_string(s.total - s.failed) + "/" + std::to_string(s.total) + "\n";
    for (const auto& r : rep.failures())
        out += "  FAIL " + r.check + " " + r.subject + ": expected " + r.expected + ", observed " + r.observed + "\n";
    return out;
}

// ---------------------------------------------------------------------------
// classify

inline CommandResult cmd_classify(const std::string& path)
{
    std::string text;
    Json report = report_header("classify", path, "");
    try {
        text = read_text_file(path);
    } catch (const IoError& e) {
        return failure(report, IoFailure, e.what());
    }
    report = report_header("classify", path, text);
    try {
        ExtractionDatum d = validate(raw_datum_from_json(parse_json(text, path)));
        BirationalClass c = classify(d);
        report["datum"] = datum_json(d);
        report["classification"] = {{"type", to_string(c.type)}, {"sigma", rational_json(c.sigma)}};
        return finish(report, Pass, std::string(to_string(c.type)) + ", sigma = " + to_string(c.sigma));
    } catch (const SchemaError& e) {
        return failure(report, InvalidInput, e.what());
    } catch (const DatumError& e) {
        return failure(report, InvalidInput, e.what());
    }
}

// ---------------------------------------------------------------------------
// sod

struct SodCommandOptions {
    int box = 6;
    std::size_t max_depth = 64;
};

inline CommandResult cmd_sod(const std::string& path, const SodCommandOptions& opt)
{
    std::string text;
    Json report = report_header("sod", path, "");
    try {
        text = read_text_file(path);
    } catch (const IoError& e) {
        return failure(report, IoFailure, e.what());
    }
    report = report_header("sod", path, text);
    report["parameters"] = {{"box", opt.box}, {"max_depth", opt.max_depth}};
    if (opt.box < 0) return failure(report, InvalidInput, "box must be non-negative");

    std::optional<ExtractionDatum> parsed;
    try {
        parsed = validate(raw_datum_from_json(parse_json(text, path)));
    } catch (const SchemaError& e) {
        return failure(report, InvalidInput, e.what());
    } catch (const DatumError& e) {
        return failure(report, InvalidInput, e.what());
    }
    const ExtractionDatum& d = *parsed;
    BirationalClass c = classify(d);
    report["datum"] = datum_json(d);
    report["classification"] = {{"type", to_string(c.type)}, {"sigma", rational_json(c.sigma)}};
    if (c.type != BirationalType::Extraction)
        return failure(report, InvalidInput,
                       "sod needs an Extraction datum (sigma < 0); this datum is " + std::string(to_string(c.type)) +
                           " with sigma = " + to_string(c.sigma) +
                           " (sigma > 0 is a Contraction, sigma = 0 is LogCrepant)");

    FibrationDatum f = induced_fibration(d);
    report["windows"] = {{"sigma", rational_json(d.sigma())},
                         {"sigma_alpha", rational_json(d.sigma_alpha())},
                         {"exceptional_step", rational_json(d.exceptional_step())}};
    report["fibration"] = {{"t", integer_json(f.t)},
                           {"t_i", integers_json(f.t_i)},
                           {"bar_a", integers_json(f.bar_a)},
                           {"s", integers_json(f.s)},
                           {"rank_D", f.rank_D()},
                           {"rank_F", f.rank_F()}};
    report["class_groups"] = {{"X", group_json(x_class_group(d))},
                              {"Y", group_json(y_class_group(d))},
                              {"face", group_json(face_class_group(d))}};

    Json spanning = Json::array();
    for (const auto& s : spanning_classes(d))
        spanning.push_back({{"key", label_key(s.representative)},
                            {"representative", integers_json(s.representative)},
                            {"w", rational_json(s.weight)},
                            {"pushforward", integers_json(phi_pushforward(d, s.representative).label)}});
    report["spanning_classes"] = spanning;

    std::vector<BlockLabel> blocks = block_labels(d);
    Json bj = Json::array();
    for (const auto& b : blocks) bj.push_back(block_json(b));
    report["block_labels"] = bj;

    std::vector<BlockLabel> in_box = verify::box_blocks(d, opt.box);
    std::vector<std::size_t> cls(in_box.size());
    std::vector<std::size_t> reps;
    for (std::size_t i = 0; i < in_box.size(); ++i) {
        cls[i] = reps.size();
        for (std::size_t r = 0; r < reps.size(); ++r)
            if (in_box[reps[r]].w == in_box[i].w && same_block(d, in_box[reps[r]].k, in_box[i].k)) {
                cls[i] = r;
                break;
            }
        if (cls[i] == reps.size()) reps.push_back(i);
    }
    Json boxed = Json::array();
    for (std::size_t i = 0; i < in_box.size(); ++i) {
        Json b = block_json(in_box[i]);
        b["dedup_class"] = block_key(in_box[reps[cls[i]]].k);
        boxed.push_back(b);
    }
    report["box_blocks"] = boxed;
    report["box_block_classes"] = reps.size();

    CheckReport ff = fully_faithful_check(d);
    CheckReport so = semiorthogonality_check(d);
    report["fully_faithful_check"] = check_report_json(ff);
    report["semiorthogonality_check"] = check_report_json(so);

    GenerationCertificate cert;
    try {
        cert = generation_certificate(d, verify::box_labels(d.n(), opt.box), opt.max_depth);
    } catch (const CertificateDepthError& e) {
        return failure(report, Mismatch, e.what());
    }
    CertificateVerdict v = verify_certificate(d, cert, nullptr);
    Json viol = Json::array();
    for (const auto& x : v.violations) viol.push_back({{"kind", to_string(x.kind)}, {"node", x.node}, {"message", x.message}});
    report["certificate"] = {{"targets", cert.targets.size()},
                             {"nodes", cert.nodes.size()},
                             {"accepted", v.ok()},
                             {"violations", viol},
                             {"dag", certificate_json(cert)}};

    bool ok = ff.passed() && so.passed() && v.ok();
    std::ostringstream s;
    s << to_string(c.type) << ", sigma = " << to_string(c.sigma) << "\n"
      << "spanning classes: " << spanning.size() << "\n"
      << "block labels: " << blocks.size() << " (" << reps.size() << " classes, " << in_box.size() << " labels in box "
      << opt.box << ")\n"
      << "fully faithful check: " << (ff.passed() ? "pass" : "FAIL") << " (" << ff.records.size() << " inequalities)\n"
      << "semiorthogonality check: " << (so.passed() ? "pass" : "FAIL") << " (" << so.records.size() << " inequalities)\n"
      << "certificate: " << (v.ok() ? "accepted" : "REJECTED") << " (" << cert.targets.size() << " targets, "
      << cert.nodes.size() << " nodes)";
    return finish(report, ok ? Pass : Mismatch, s.str());
}

// ---------------------------------------------------------------------------
// oracle

struct OracleCommandOptions {
    bool verify_sod = false;
    int box = 4;
    std::size_t max_depth = 64;
};

/// A catalog name, or a JSON file holding a model pair, a datum or a single fan.
struct OracleTarget {
    std::optional<ModelPair> model;
    std::optional<oracle::StackyFan> fan;
    std::string name;
    std::string bytes;
};

inline OracleTarget load_oracle_target(const std::string& target)
{
    OracleTarget t;
    for (const auto& n : catalog_names())
        if (n == target) {
            t.model = canned_example(target);
            t.name = target;
            t.bytes = model_json(*t.model).dump();
            return t;
        }
    if (!std::filesystem::exists(target)) {
        std::string known;
        for (const auto& n : catalog_names()) known += (known.empty() ? "" : ", ") + n;
        throw IoError("no such file or catalog model: " + target + " (catalog: " + known + ")");
    }
    t.bytes = read_text_file(target);
    Json j = parse_json(t.bytes, target);
    t.name = j.is_object() && j.contains("name") && j["name"].is_string() ? j["name"].get<std::string>()
                                                                          : std::filesystem::path(target).stem().string();
    if (j.is_object() && j.contains("fan_X"))
        t.model = model_from_json(j);
    else if (j.is_object() && j.contains("a"))
        t.model = model_from_datum(t.name, validate(raw_datum_from_json(j)));
    else {
        t.fan = fan_from_json(j);
        oracle::require_complete(*t.fan);
    }
    return t;
}

inline CommandResult cmd_oracle(const std::string& target, const OracleCommandOptions& opt)
{
    Json report = report_header("oracle", target, "");
    OracleTarget t;
    try {
        t = load_oracle_target(target);
    } catch (const IoError& e) {
        return failure(report, IoFailure, e.what());
    } catch (const SchemaError& e) {
        return failure(report, InvalidInput, e.what());
    } catch (const DatumError& e) {
        return failure(report, InvalidInput, e.what());
    } catch (const oracle::FanError& e) {
        return failure(report, InvalidInput, e.what());
    } catch (const ModelError& e) {
        return failure(report, InvalidInput, e.what());
    }
    report = report_header("oracle", target, t.bytes);
    report["parameters"] = {{"box", opt.box}, {"verify_sod", opt.verify_sod}, {"max_depth", opt.max_depth}};
    if (opt.box < 0) return failure(report, InvalidInput, "box must be non-negative");

    std::ostringstream s;
    try {
        oracle::OracleOptions oo;
        verify::OracleReport self;
        if (t.fan) {
            oracle::CohomologyOracle o(*t.fan, oo);
            report["fan"] = fan_json(*t.fan);
            self = verify::oracle_self_test(o, t.name, opt.box);
            report["self_test"] = oracle_report_json(self);
            s << "oracle self-tests " << (self.passed() ? "pass" : "FAIL") << "\n" << oracle_summary_lines(self);
            std::string text = s.str();
            text.pop_back();
            return finish(report, self.passed() ? Pass : Mismatch, text);
        }

        const ModelPair& m = *t.model;
        BirationalClass c = classify(m.datum);
        report["model"] = model_json(m);
        report["classification"] = {{"type", to_string(c.type)}, {"sigma", rational_json(c.sigma)}};
        oracle::CohomologyOracle X(m.fan_X, oo), Y(m.fan_Y, oo);
        self = verify::oracle_self_test(X, m.name + ".X", opt.box);
        self.append(verify::oracle_self_test(Y, m.name + ".Y", opt.box));
        report["self_test"] = oracle_report_json(self);
        s << "oracle self-tests " << (self.passed() ? "pass" : "FAIL") << "\n" << oracle_summary_lines(self);
        bool ok = self.passed();

        if (opt.verify_sod) {
            if (c.type != BirationalType::Extraction) {
                report["sod"] = {{"skipped", true}, {"reason", to_string(c.type)}};
                s << "SOD checks skipped: " << to_string(c.type) << "\n";
            } else {
                verify::OracleReport sod = verify::verify_sod(m, X, Y, {opt.box, opt.max_depth});
                Json sj = oracle_report_json(sod);
                sj["skipped"] = false;
                report["sod"] = sj;
                s << "SOD checks " << (sod.passed() ? "pass" : "FAIL") << "\n" << oracle_summary_lines(sod);
                ok = ok && sod.passed();
            }
        }
        std::string text = s.str();
        if (!text.empty() && text.back() == '\n') text.pop_back();
        return finish(report, ok ? Pass : Mismatch, text);
    } catch (const oracle::OracleError& e) {
        return failure(report, Mismatch, e.what());
    } catch (const CertificateDepthError& e) {
        return failure(report, Mismatch, e.what());
    }
}

}  // namespace torsod::cli
