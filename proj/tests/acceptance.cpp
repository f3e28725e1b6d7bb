#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include <sys/wait.h>

#include "torsod/torsod.hpp"

using namespace torsod;

namespace {

struct Outcome {
    bool ok = true;
    std::string detail;
};

struct Failure {
    std::ostringstream text;
    bool any = false;
    template <class T>
    Failure& operator<<(const T& x)
    {
        any = true;
        text << x;
        return *this;
    }
};

int run(int id, const std::string& title, double budget_seconds, const std::function<Outcome()>& body)
{
    auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (o.ok && s >= budget_seconds) {
        std::ostringstream b;
        b << "over budget of " << budget_seconds << " s";
        o = {false, b.str()};
    }
    std::printf("%s %d %s (%.3f s)%s%s\n", o.ok ? "PASS" : "FAIL", id, title.c_str(), s, o.detail.empty() ? "" : ": ",
                o.detail.c_str());
    std::fflush(stdout);
    return o.ok ? 0 : 1;
}

Outcome from(const Failure& f, const std::string& success)
{
    return f.any ? Outcome{false, f.text.str()} : Outcome{true, success};
}

RawDatum a1_half_raw(std::vector<long long> r)
{
    auto iv = [](std::initializer_list<long long> xs) {
        IntVector v;
        for (auto x : xs) v.emplace_back(x);
        return v;
    };
    IntVector rr;
    for (auto x : r) rr.emplace_back(x);
    return {2, 2, {iv({1, 0}), iv({1, 2}), iv({1, 1})}, iv({1, 1, -2}), rr};
}

oracle::StackyFan fan(std::size_t rank, std::vector<std::pair<oracle::Point, std::int64_t>> rays,
                      std::vector<std::vector<std::size_t>> cones)
{
    oracle::StackyFan f;
    f.lattice_rank = rank;
    for (auto& [v, r] : rays) f.rays.push_back({v, r});
    f.max_cones = std::move(cones);
    return f;
}

std::string slurp(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

int shell(const std::string& cmd)
{
    int rc = std::system(cmd.c_str());
    return rc == -1 ? -1 : WEXITSTATUS(rc);
}

std::string shell_quote(const std::string& s) { return "'" + s + "'"; }

// 1
Outcome classification()
{
    Failure f;
    struct Case {
        const char* name;
        RawDatum raw;
        BirationalType type;
        Rational sigma;
    };
    std::vector<Case> cs{{"a1-half", a1_half_raw({2, 2, 1}), BirationalType::Extraction, Rational(-1)},
                         {"smooth-blowup", canned_example("smooth-blowup").datum.raw(), BirationalType::Contraction, Rational(1)},
                         {"a1-half r=(1,1,1)", a1_half_raw({1, 1, 1}), BirationalType::LogCrepant, Rational(0)}};
    for (const auto& c : cs) {
        ExtractionDatum d = validate(c.raw);
        auto t0 = std::chrono::steady_clock::now();
        BirationalClass k = classify(d);
        double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (k.type != c.type || k.sigma != c.sigma)
            f << c.name << " gave " << to_string(k.type) << " sigma " << to_string(k.sigma) << "; ";
        if (s >= 1e-3) f << c.name << " took " << s << " s; ";
    }
    return from(f, "Extraction -1, Contraction 1, LogCrepant 0");
}

// 2
Outcome face_vanishing()
{
    Failure f;
    ModelPair m = canned_example("a1-half");
    const ExtractionDatum& d = m.datum;
    // k_3 from sum a_i k_i / r_i = 0 in plain integers.
    const long long a1 = 1, a2 = 1, a3 = -2, r1 = 2, r2 = 2, r3 = 1;
    int agree = 0;
    for (long long k1 = -4; k1 <= 4; ++k1)
        for (long long k2 = -4; k2 <= 4; ++k2) {
            const long long num = -(a1 * k1 * r2 + a2 * k2 * r1) * r3;
            const long long den = a3 * r1 * r2;
            const bool integral = num % den == 0;
            const bool derived = !(integral && (num / den) % r3 == 0);
            IntVector k{k1, k2};
            if (face_vanishes(d, k) != derived) f << "k=(" << k1 << "," << k2 << ") disagrees; ";
            else ++agree;
        }
    oracle::CohomologyOracle Y(m.fan_Y);
    CheckReport ff = fully_faithful_check(d);
    int subsets = 0;
    for (std::uint64_t I : detail::nonempty_subsets(d.alpha())) {
        IntVector k = detail::minus_subset(IntVector(d.alpha(), 0), I);
        const bool predicted = face_vanishes(d, detail::extend(k, d.n()));
        oracle::CohomologyVector h = Y.ext(oracle::single(oracle::Label(Y.ray_count(), 0)), verify::block_object(m, k));
        if (predicted != h.is_zero())
            f << "I=" << detail::subset_string(I) << " predicted " << predicted << " oracle " << verify::dims_string(h) << "; ";
        if (!predicted) f << "I=" << detail::subset_string(I) << " is not covered by the vanishing test; ";
        ++subsets;
    }
    for (const auto& r : ff.records)
        if (r.check == "ff.koszul_vanishing" && !r.holds) f << r.check << " " << r.subject << " fails; ";
    return from(f, std::to_string(agree) + " labels agree, " + std::to_string(subsets) + " indicator subsets vanish on Y");
}

// 3
Outcome fully_faithful()
{
    Failure f;
    ModelPair m = canned_example("a1-half");
    oracle::CohomologyOracle X(m.fan_X), Y(m.fan_Y);
    auto classes = spanning_classes(m.datum);
    int pairs = 0;
    for (const auto& a : classes)
        for (const auto& b : classes) {
            oracle::CohomologyVector ex = X.ext_groups(m.lift_x(a.representative), m.lift_x(b.representative));
            Pushforward pa = phi_pushforward(m.datum, a.representative), pb = phi_pushforward(m.datum, b.representative);
            oracle::CohomologyVector ey = Y.ext_groups(m.lift_y(pa.label), m.lift_y(pb.label));
            if (!ex.same_dims(ey))
                f << label_key(a.representative) << "," << label_key(b.representative) << ": X " << ex.str() << " Y "
                  << ey.str() << "; ";
            ++pairs;
        }
    verify::OracleReport box;
    verify::check_fully_faithful(m, X, Y, 2, box);
    for (const auto& r : box.failures()) f << r.subject << " X " << r.expected << " Y " << r.observed << "; ";
    return from(f, std::to_string(pairs) + " representative pairs, " + std::to_string(box.records.size()) +
                       " window pairs in box 2");
}

// 4
Outcome semiorthogonality()
{
    Failure f;
    ModelPair m = canned_example("a1-half");
    oracle::CohomologyOracle Y(m.fan_Y);
    CheckReport ineq = fully_faithful_check(m.datum);
    CheckReport so = semiorthogonality_check(m.datum);
    for (const auto* rep : {&ineq, &so})
        for (const auto& r : rep->records)
            if (!r.holds) f << r.check << " " << r.subject << "; ";
    verify::OracleReport rep;
    verify::check_image_vs_blocks(m, Y, 4, rep);
    verify::check_block_vs_block(m, Y, 4, rep);
    verify::check_block_dedup(m, Y, 4, rep);
    for (const auto& r : rep.failures()) f << r.check << " " << r.subject << " observed " << r.observed << "; ";
    return from(f, std::to_string(ineq.records.size() + so.records.size()) + " inequalities, " +
                       std::to_string(rep.records.size()) + " oracle Ext vanishings");
}

// 5
Outcome generation()
{
    Failure f;
    ModelPair m = canned_example("a1-half");
    oracle::CohomologyOracle Y(m.fan_Y);
    GenerationCertificate cert = generation_certificate(m.datum, verify::box_labels(m.datum.n(), 6));
    CertificateReplay replay = verify::certificate_replay(m, Y);
    CertificateVerdict v = verify_certificate(m.datum, cert, &replay);
    std::size_t koszul = 0;
    for (const auto& [key, node] : cert.nodes) koszul += node.kind == NodeKind::Koszul;
    for (const auto& viol : v.violations) f << to_string(viol.kind) << " at " << viol.node << "; ";
    if (v.koszul_nodes_replayed != koszul) f << v.koszul_nodes_replayed << " of " << koszul << " Koszul nodes replayed; ";
    return from(f, std::to_string(cert.targets.size()) + " targets, " + std::to_string(cert.nodes.size()) + " nodes, " +
                       std::to_string(koszul) + " Koszul replays");
}

// 6
Outcome oracle_validation()
{
    Failure f;
    oracle::StackyFan p1 = fan(1, {{{1}, 1}, {{-1}, 1}}, {{0}, {1}});
    oracle::StackyFan p2 = fan(2, {{{1, 0}, 1}, {{0, 1}, 1}, {{-1, -1}, 1}}, {{0, 1}, {1, 2}, {0, 2}});
    oracle::StackyFan sp1 = fan(1, {{{1}, 2}, {{-1}, 1}}, {{0}, {1}});
    oracle::CohomologyOracle P1(p1), P2(p2);
    for (std::int64_t d = 0; d <= 5; ++d)
        if (P1.cohomology({d, 0}).dim(0) != d + 1) f << "h0(P1,O(" << d << ")) wrong; ";
    if (P1.cohomology({-2, 0}).dim(1) != 1) f << "h1(P1,O(-2)) wrong; ";
    oracle::CohomologyVector o = P2.cohomology({0, 0, 0});
    if (!(o.dim(0) == 1 && o.dim(1) == 0 && o.dim(2) == 0 && o.max_degree() <= 2)) f << "h(P2,O) = " << o.str() << "; ";
    ModelPair m = canned_example("a1-half");
    std::size_t labels = 0;
    for (const auto& [name, fn] : std::vector<std::pair<std::string, oracle::StackyFan>>{
             {"P1", p1}, {"P2", p2}, {"P1(2,1)", sp1}, {"a1-half X", m.fan_X}, {"a1-half Y", m.fan_Y}}) {
        oracle::CohomologyOracle O(fn);
        for (const auto& k : verify::oracle_box(O.ray_count(), 4)) {
            ++labels;
            if (!O.serre_duality_check(k)) f << name << " Serre fails at " << oracle::point_string(k) << "; ";
        }
    }
    return from(f, "Serre duality on " + std::to_string(labels) + " labels over 5 fans");
}

// 7
Outcome determinism()
{
    Failure f;
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "torsod_acceptance";
    fs::create_directories(dir);
    const std::string cli = TORSOD_CLI;
    const std::string datum = std::string(TORSOD_DATA_DIR) + "/a1-half.json";
    struct Run {
        std::string name, args;
    };
    for (const Run& r : {Run{"sod", "sod " + shell_quote(datum)}, Run{"oracle", "oracle a1-half --verify-sod"}}) {
        std::string out[2];
        for (int i = 0; i < 2; ++i) {
            std::string path = (dir / (r.name + std::to_string(i) + ".json")).string();
            fs::remove(path);
            int rc = shell(shell_quote(cli) + " " + r.args + " --json " + shell_quote(path) + " >/dev/null 2>&1");
            if (rc != 0) f << r.name << " run " << i << " exited " << rc << "; ";
            out[i] = slurp(path);
        }
        if (out[0].empty() || out[0] != out[1]) f << r.name << " reports differ; ";
    }
    std::string a = cli::cmd_sod(datum, {}).report.dump(), b = cli::cmd_sod(datum, {}).report.dump();
    std::string c = cli::cmd_oracle("a1-half", {true, 4, 64}).report.dump(),
                e = cli::cmd_oracle("a1-half", {true, 4, 64}).report.dump();
    if (a != b) f << "cmd_sod in process differs; ";
    if (c != e) f << "cmd_oracle in process differs; ";
    return from(f, "sod and oracle reports byte-identical across runs");
}

// 8
Outcome invariants()
{
    Failure f;
    namespace fs = std::filesystem;
    fs::path log = fs::temp_directory_path() / "torsod_acceptance" / "properties.txt";
    fs::create_directories(log.parent_path());
    int rc = shell(shell_quote(TORSOD_PROPERTIES) + " '[property]' > " + shell_quote(log.string()) + " 2>&1");
    std::string text = slurp(log.string());
    if (rc != 0) f << "property suite exited " << rc << "; ";
    auto pos = text.find("All tests passed");
    if (pos == std::string::npos) f << "no pass line in property output; ";
    std::string line = pos == std::string::npos ? "" : text.substr(pos, text.find('\n', pos) - pos);
    return from(f, line + ", 1000 random cases per suite");
}

}  // namespace

int main()
{
    int failed = 0;
    failed += run(1, "classification trichotomy", 1.0, classification);
    failed += run(2, "face vanishing against exact k_{n+1} and oracle", 10.0, face_vanishing);
    failed += run(3, "pushforward is fully faithful", 30.0, fully_faithful);
    failed += run(4, "semiorthogonality on box 4", 60.0, semiorthogonality);
    failed += run(5, "generation certificate on box 6 with Euler replay", 30.0, generation);
    failed += run(6, "oracle self-validation", 60.0, oracle_validation);
    failed += run(7, "deterministic JSON reports", 600.0, determinism);
    failed += run(8, "structural invariant properties", 600.0, invariants);
    std::printf("%d of 8 criteria passed\n", 8 - failed);
    return failed == 0 ? 0 : 1;
}
