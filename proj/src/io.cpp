#include "anisosurf/io.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"

namespace anisosurf {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

void atomic_write_text(const std::string& path, const std::string& text) {
    const fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("atomic_write_text: cannot open " + tmp.string());
        f << text;
        if (!f) throw std::runtime_error("atomic_write_text: write failed for " + tmp.string());
    }
    fs::rename(tmp, target);
}

std::string read_text_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open file: " + path);
    std::ostringstream out;
    out << f.rdbuf();
    return out.str();
}

std::string current_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// --- dataset files ----------------------------------------------------------

std::string dataset_to_csv(const SurfaceDataset& dataset, const std::string& timestamp) {
    std::string out;
    out += "# anisosurf dataset\n";
    out += "# domain " + format_double(dataset.domain.t1_min) + " " +
           format_double(dataset.domain.t1_max) + " " + format_double(dataset.domain.t2_min) +
           " " + format_double(dataset.domain.t2_max) + "\n";
    if (dataset.noise_known_sigma)
        out += "# sigma " + format_double(*dataset.noise_known_sigma) + "\n";
    if (!timestamp.empty()) out += "# written " + timestamp + "\n";
    out += "sheet_id,t1,t2,y\n";
    for (const Sheet& sheet : dataset.sheets) {
        const std::string id = std::to_string(sheet.id);
        for (std::size_t i = 0; i < sheet.points.size(); ++i) {
            out += id;
            out += ',';
            out += format_double(sheet.points[i].t1);
            out += ',';
            out += format_double(sheet.points[i].t2);
            out += ',';
            out += format_double(sheet.values[i]);
            out += '\n';
        }
    }
    return out;
}

void write_dataset(const SurfaceDataset& dataset, const std::string& path, bool deterministic) {
    atomic_write_text(path, dataset_to_csv(dataset, deterministic ? "" : current_timestamp()));
}

namespace {

double parse_number(const std::string& token, const std::string& where) {
    const char* begin = token.data();
    const char* end = begin + token.size();
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end)
        throw ConfigError(where + ": malformed number '" + token + "'");
    return value;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

}  // namespace

SurfaceDataset parse_dataset_csv(const std::string& text, const std::string& origin) {
    std::istringstream in(text);
    std::string line;
    int line_no = 0;

    std::optional<Domain> domain;
    std::optional<double> sigma;
    bool header_seen = false;

    std::vector<Sheet> sheets;
    std::map<std::int64_t, std::size_t> sheet_of;

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::string where = origin + " line " + std::to_string(line_no);

        if (line[0] == '#') {
            std::istringstream meta(line.substr(1));
            std::string tag;
            meta >> tag;
            if (tag == "domain") {
                double a, b, c, d;
                if (!(meta >> a >> b >> c >> d))
                    throw ConfigError(where + ": domain metadata needs 4 numbers");
                domain.emplace(a, b, c, d);
            } else if (tag == "sigma") {
                double v;
                if (!(meta >> v)) throw ConfigError(where + ": sigma metadata needs a number");
                if (v < 0.0) throw ConfigError(where + ": sigma must be >= 0");
                sigma = v;
            }
            continue;
        }

        if (!header_seen) {
            if (line != "sheet_id,t1,t2,y")
                throw ConfigError(where + ": expected header 'sheet_id,t1,t2,y'");
            header_seen = true;
            continue;
        }

        const std::vector<std::string> fields = split(line, ',');
        if (fields.size() != 4) throw ConfigError(where + ": expected 4 fields");
        std::int64_t id = 0;
        {
            const char* b = fields[0].data();
            const char* e = b + fields[0].size();
            const auto [ptr, ec] = std::from_chars(b, e, id);
            if (ec != std::errc{} || ptr != e)
                throw ConfigError(where + ": malformed sheet_id '" + fields[0] + "'");
        }
        const Point p{parse_number(fields[1], where), parse_number(fields[2], where)};
        const double y = parse_number(fields[3], where);

        auto it = sheet_of.find(id);
        if (it == sheet_of.end()) {
            it = sheet_of.emplace(id, sheets.size()).first;
            sheets.emplace_back();
            sheets.back().id = id;
        }
        sheets[it->second].points.push_back(p);
        sheets[it->second].values.push_back(y);
    }

    if (!domain) throw ConfigError(origin + ": missing '# domain a b c d' metadata line");
    if (!header_seen) throw ConfigError(origin + ": missing 'sheet_id,t1,t2,y' header");

    SurfaceDataset dataset(*domain);
    dataset.sheets = std::move(sheets);
    dataset.noise_known_sigma = sigma;
    return dataset;
}

SurfaceDataset read_dataset(const std::string& path) {
    return parse_dataset_csv(read_text_file(path), path);
}

// --- JSON-lines records -----------------------------------------------------

namespace {

const char* flag_name(DegenerateFlag flag) {
    switch (flag) {
        case DegenerateFlag::GammaNonpositive: return "gamma_nonpositive";
        case DegenerateFlag::AlphaDegenerate: return "alpha_degenerate";
        case DegenerateFlag::DhatZero: return "dhat_zero";
    }
    return "unknown";
}

}  // namespace

std::string estimate_to_json_line(const RegularityEstimate& est) {
    ordered_json j;
    j["t1"] = est.t.t1;
    j["t2"] = est.t.t2;
    j["h_low"] = est.h_low;
    j["h_high"] = est.h_high;
    j["d_hat"] = est.d_hat;
    j["anisotropic"] = est.anisotropic;
    j["h1_hat"] = est.h1_hat;
    j["h2_hat"] = est.h2_hat;
    j["axis1_is_low"] = est.axis1_is_low;
    j["l1"] = {est.l1[0], est.l1[1]};
    j["l2"] = {est.l2[0], est.l2[1]};
    j["gamma"] = {est.gamma_values[0], est.gamma_values[1]};
    j["theta"] = {{est.theta_values[0][0], est.theta_values[0][1]},
                  {est.theta_values[1][0], est.theta_values[1][1]}};
    j["v_hat"] = est.v_hat;
    std::vector<std::string> flags;
    for (DegenerateFlag f : est.degenerate_flags) flags.push_back(flag_name(f));
    j["degenerate"] = flags;
    return j.dump();
}

std::string deformation_to_json_line(const Point& t, const DeformationEstimate& e1,
                                     const DeformationEstimate& e2) {
    ordered_json j;
    j["t1"] = t.t1;
    j["t2"] = t.t2;
    j["a1_hat"] = e1.a1_hat;
    j["a2_hat"] = e2.a2_hat;
    j["quadrature_nodes"] = e1.quadrature_nodes;
    return j.dump();
}

std::string prediction_to_json_line(const Point& t, const AdaptivePrediction& pred) {
    ordered_json j;
    j["t1"] = t.t1;
    j["t2"] = t.t2;
    j["value"] = pred.value;
    j["effective_n"] = pred.effective_n;
    j["h1"] = pred.plan.h1;
    j["h2"] = pred.plan.h2;
    j["omega"] = pred.plan.omega;
    j["sigma2"] = pred.plan.sigma2;
    j["m0"] = pred.plan.m0;
    return j.dump();
}

// --- strict JSON config parsing ---------------------------------------------

namespace {

using nlohmann::json;

json parse_json(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw ConfigError("config: malformed JSON");
    return j;
}

// Tracks which keys were consumed so leftovers can be reported by path.
class ObjectReader {
public:
    ObjectReader(const json& j, std::string path) : obj_(j), path_(std::move(path)) {
        if (!j.is_object()) throw ConfigError(path_ + ": expected an object");
    }

    const std::string& path() const { return path_; }
    std::string child_path(const std::string& key) const { return path_ + "." + key; }

    bool has(const std::string& key) const { return obj_.contains(key); }

    const json& get(const std::string& key) {
        seen_.insert(key);
        const auto it = obj_.find(key);
        if (it == obj_.end()) throw ConfigError(child_path(key) + ": missing required key");
        return *it;
    }

    const json* find(const std::string& key) {
        seen_.insert(key);
        const auto it = obj_.find(key);
        return it == obj_.end() ? nullptr : &*it;
    }

    double number(const std::string& key) { return as_number(get(key), child_path(key)); }

    double number_or(const std::string& key, double fallback) {
        const json* j = find(key);
        return j ? as_number(*j, child_path(key)) : fallback;
    }

    std::optional<double> opt_number(const std::string& key) {
        const json* j = find(key);
        if (!j) return std::nullopt;
        return as_number(*j, child_path(key));
    }

    long long integer(const std::string& key) { return as_integer(get(key), child_path(key)); }

    long long integer_or(const std::string& key, long long fallback) {
        const json* j = find(key);
        return j ? as_integer(*j, child_path(key)) : fallback;
    }

    std::uint64_t u64_or(const std::string& key, std::uint64_t fallback) {
        const json* j = find(key);
        if (!j) return fallback;
        if (!j->is_number_unsigned() && !j->is_number_integer())
            throw ConfigError(child_path(key) + ": expected an unsigned integer");
        if (j->is_number_integer() && j->get<long long>() < 0)
            throw ConfigError(child_path(key) + ": expected an unsigned integer");
        return j->get<std::uint64_t>();
    }

    std::string string(const std::string& key) { return as_string(get(key), child_path(key)); }

    std::string string_or(const std::string& key, const std::string& fallback) {
        const json* j = find(key);
        return j ? as_string(*j, child_path(key)) : fallback;
    }

    std::vector<double> number_list_or(const std::string& key, std::vector<double> fallback) {
        const json* j = find(key);
        if (!j) return fallback;
        if (!j->is_array()) throw ConfigError(child_path(key) + ": expected an array");
        std::vector<double> out;
        for (const json& v : *j) out.push_back(as_number(v, child_path(key)));
        return out;
    }

    std::vector<int> int_list_or(const std::string& key, std::vector<int> fallback) {
        const json* j = find(key);
        if (!j) return fallback;
        if (!j->is_array()) throw ConfigError(child_path(key) + ": expected an array");
        std::vector<int> out;
        for (const json& v : *j)
            out.push_back(static_cast<int>(as_integer(v, child_path(key))));
        return out;
    }

    // Call after all expected keys were requested; anything else is a typo.
    void finish() const {
        for (const auto& [key, value] : obj_.items()) {
            (void)value;
            if (!seen_.count(key))
                throw ConfigError(path_ + ": unknown key '" + key + "'");
        }
    }

private:
    static double as_number(const json& j, const std::string& path) {
        if (!j.is_number()) throw ConfigError(path + ": expected a number");
        return j.get<double>();
    }
    static long long as_integer(const json& j, const std::string& path) {
        if (!j.is_number_integer() && !j.is_number_unsigned())
            throw ConfigError(path + ": expected an integer");
        return j.get<long long>();
    }
    static std::string as_string(const json& j, const std::string& path) {
        if (!j.is_string()) throw ConfigError(path + ": expected a string");
        return j.get<std::string>();
    }

    const json& obj_;
    std::string path_;
    std::set<std::string> seen_;
};

Domain parse_domain(const json& j, const std::string& path) {
    ObjectReader r(j, path);
    const double a = r.number("t1_min"), b = r.number("t1_max");
    const double c = r.number("t2_min"), d = r.number("t2_max");
    r.finish();
    try {
        return Domain(a, b, c, d);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

void check_eta_range(double value, const std::string& name) {
    if (!(value > 0.0 && value < 1.0))
        throw ConfigError(name + " must lie in (0,1)");
}

// Constant or per-axis affine Hurst functions of the deformed coordinates.
void parse_eta(ObjectReader& parent, FieldSpec& field, const Domain& domain,
               const Deformation& deformation) {
    ObjectReader r(parent.get("eta"), parent.child_path("eta"));
    const std::string kind = r.string("kind");
    if (kind == "constant") {
        const double h1 = r.number("h1");
        const double h2 = r.number("h2");
        r.finish();
        check_eta_range(h1, "eta1");
        check_eta_range(h2, "eta2");
        field.eta1 = [h1](Point) { return h1; };
        field.eta2 = [h2](Point) { return h2; };
    } else if (kind == "linear") {
        const double b1 = r.number("base1"), s1 = r.number_or("slope1", 0.0);
        const double b2 = r.number("base2"), s2 = r.number_or("slope2", 0.0);
        r.finish();
        field.eta1 = [b1, s1](Point u) { return b1 + s1 * u.t1; };
        field.eta2 = [b2, s2](Point u) { return b2 + s2 * u.t2; };
        // affine in one deformed coordinate and the deformation is
        // componentwise monotone, so domain corners are extreme
        const Point corners[4] = {{domain.t1_min, domain.t2_min},
                                  {domain.t1_min, domain.t2_max},
                                  {domain.t1_max, domain.t2_min},
                                  {domain.t1_max, domain.t2_max}};
        for (const Point& c : corners) {
            const Point u = deformation.apply(c);
            check_eta_range(field.eta1(u), "eta1");
            check_eta_range(field.eta2(u), "eta2");
        }
    } else {
        throw ConfigError(r.child_path("kind") + ": expected 'constant' or 'linear'");
    }
}

Deformation parse_deformation(ObjectReader& parent) {
    const json* j = parent.find("deformation");
    if (!j) return Deformation::identity();
    ObjectReader r(*j, parent.child_path("deformation"));
    const std::string kind = r.string("kind");
    if (kind == "identity") {
        r.finish();
        return Deformation::identity();
    }
    if (kind == "component_power") {
        const double p1 = r.number("p1");
        const double p2 = r.number("p2");
        r.finish();
        if (!(p1 >= 1.0) || !(p2 >= 1.0))
            throw ConfigError(parent.child_path("deformation") + ": powers must be >= 1");
        return Deformation::component_power(p1, p2);
    }
    throw ConfigError(r.child_path("kind") + ": expected 'identity' or 'component_power'");
}

DesignLaw parse_design(ObjectReader& parent, double& mean_points) {
    const json* j = parent.find("design");
    DesignLaw law;
    if (!j) {
        law.grid_shape = {21, 21};
        return law;
    }
    ObjectReader r(*j, parent.child_path("design"));
    const std::string kind = r.string("kind");
    if (kind == "common_grid") {
        const int n1 = static_cast<int>(r.integer_or("n1", 21));
        const int n2 = static_cast<int>(r.integer_or("n2", 21));
        r.finish();
        if (n1 < 2 || n2 < 2) throw ConfigError(r.path() + ": grid needs n1, n2 >= 2");
        if (static_cast<long long>(n1) * n2 > kMaxGridPoints)
            throw ConfigError(r.path() + ": common grid capped at " +
                              std::to_string(kMaxGridPoints) + " points");
        law.kind = DesignKind::CommonGrid;
        law.grid_shape = {n1, n2};
        return law;
    }
    if (kind == "independent_uniform" || kind == "independent_poisson") {
        mean_points = r.number("mean_points");
        r.finish();
        if (!(mean_points > 0.0)) throw ConfigError(r.path() + ": mean_points must be > 0");
        law.kind = kind == "independent_uniform" ? DesignKind::IndependentUniform
                                                 : DesignKind::IndependentPoisson;
        return law;
    }
    throw ConfigError(r.child_path("kind") +
                      ": expected 'common_grid', 'independent_uniform' or "
                      "'independent_poisson'");
}

PointsSpec parse_points(ObjectReader& parent) {
    ObjectReader r(parent.get("points"), parent.child_path("points"));
    PointsSpec spec;
    const std::string kind = r.string("kind");
    if (kind == "grid") {
        spec.is_grid = true;
        spec.n1 = static_cast<int>(r.integer_or("n1", 5));
        spec.n2 = static_cast<int>(r.integer_or("n2", 5));
        spec.margin_delta_mult = r.number_or("margin_delta_mult", 3.0);
        r.finish();
        if (spec.n1 < 1 || spec.n2 < 1)
            throw ConfigError(r.path() + ": grid needs n1, n2 >= 1");
        if (!(spec.margin_delta_mult >= 2.0))
            throw ConfigError(r.child_path("margin_delta_mult") + ": must be >= 2");
        return spec;
    }
    if (kind == "list") {
        spec.is_grid = false;
        const json& arr = r.get("points");
        r.finish();
        if (!arr.is_array() || arr.empty())
            throw ConfigError(r.child_path("points") + ": expected a non-empty array");
        for (const json& p : arr) {
            if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
                throw ConfigError(r.child_path("points") + ": entries must be [t1, t2]");
            spec.list.push_back({p[0].get<double>(), p[1].get<double>()});
        }
        return spec;
    }
    throw ConfigError(r.child_path("kind") + ": expected 'grid' or 'list'");
}

RegOptions parse_reg(ObjectReader& parent) {
    RegOptions opts;
    const json* j = parent.find("reg");
    if (!j) return opts;
    ObjectReader r(*j, parent.child_path("reg"));
    opts.delta = r.opt_number("delta");
    opts.tau = r.opt_number("tau");
    opts.beta_low = r.opt_number("beta_low");
    opts.beta_high_l = r.opt_number("beta_high_l");
    opts.v_floor = r.opt_number("v_floor");
    opts.policy = r.string_or("policy", "nearest");
    opts.pilot_bandwidth = r.opt_number("pilot_bandwidth");
    r.finish();
    if (opts.policy != "nearest" && opts.policy != "pilot")
        throw ConfigError(r.child_path("policy") + ": expected 'nearest' or 'pilot'");
    return opts;
}

DeformationAnchor parse_anchor(ObjectReader& parent, const Domain& domain) {
    ObjectReader r(parent.get("anchor"), parent.child_path("anchor"));
    DeformationAnchor anchor;
    anchor.t0 = r.number("t0");
    anchor.s0 = r.number("s0");
    anchor.lambda1 = r.number("lambda1");
    anchor.lambda2 = r.number("lambda2");
    r.finish();
    try {
        anchor.validate(domain);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(r.path() + ": " + e.what());
    }
    return anchor;
}

}  // namespace

std::vector<Point> PointsSpec::resolve(const Domain& domain, double delta) const {
    if (!is_grid) return list;
    const double m = margin_delta_mult * delta;
    const double lo1 = domain.t1_min + m, hi1 = domain.t1_max - m;
    const double lo2 = domain.t2_min + m, hi2 = domain.t2_max - m;
    if (!(lo1 <= hi1) || !(lo2 <= hi2))
        throw ConfigError("points: interior margin swallows the domain");
    std::vector<Point> out;
    out.reserve(static_cast<std::size_t>(n1) * n2);
    for (int i = 0; i < n1; ++i) {
        const double t1 = (n1 == 1) ? 0.5 * (lo1 + hi1) : lo1 + (hi1 - lo1) * i / (n1 - 1.0);
        for (int j = 0; j < n2; ++j) {
            const double t2 =
                (n2 == 1) ? 0.5 * (lo2 + hi2) : lo2 + (hi2 - lo2) * j / (n2 - 1.0);
            out.push_back({t1, t2});
        }
    }
    return out;
}

RegParams RegOptions::resolve(const SurfaceDataset& dataset) const {
    RegParams params;
    params.delta = delta ? *delta : default_delta(dataset);
    params.tau = tau ? *tau : default_tau(params.delta);
    if (beta_low) params.beta_low = *beta_low;
    if (beta_high_l) params.beta_high_L = *beta_high_l;
    if (v_floor) params.v_floor = *v_floor;
    if (policy == "pilot") {
        std::size_t max_sheet = 1;
        for (const Sheet& s : dataset.sheets) max_sheet = std::max(max_sheet, s.points.size());
        params.policy = ApproxPolicy::pilot(
            pilot_bandwidth ? *pilot_bandwidth
                            : default_pilot_bandwidth(dataset.domain, max_sheet));
    } else {
        params.policy = ApproxPolicy::nearest();
    }
    try {
        params.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("reg: ") + e.what());
    }
    return params;
}

KernelSpec SmoothJob::kernel_spec() const {
    if (kernel == "boxcar") return KernelSpec::boxcar();
    if (kernel == "biweight_product") return KernelSpec::biweight_product();
    throw ConfigError("kernel: expected 'boxcar' or 'biweight_product'");
}

SimConfig parse_simulate_config(const std::string& json_text) {
    const json doc = parse_json(json_text);
    ObjectReader r(doc, "simulate");
    const Domain domain = parse_domain(r.get("domain"), r.child_path("domain"));
    SimConfig config(domain);
    config.n_sheets = static_cast<int>(r.integer("n_sheets"));
    if (config.n_sheets < 1) throw ConfigError(r.child_path("n_sheets") + ": must be >= 1");
    config.seed = r.u64_or("seed", 0);
    config.jitter = r.number_or("jitter", 1e-10);
    if (!(config.jitter >= 0.0)) throw ConfigError(r.child_path("jitter") + ": must be >= 0");

    config.field.deformation = parse_deformation(r);
    parse_eta(r, config.field, domain, config.field.deformation);
    config.field.design = parse_design(r, config.field.mean_points_m);

    const double sigma = r.number_or("sigma", 0.0);
    if (sigma < 0.0) throw ConfigError(r.child_path("sigma") + ": must be >= 0");
    config.field.sigma_fn = [sigma](Point, double) { return sigma; };
    r.finish();
    return config;
}

EstimateJob parse_estimate_config(const std::string& json_text) {
    const json doc = parse_json(json_text);
    ObjectReader r(doc, "estimate");
    EstimateJob job;
    job.dataset_path = r.string("dataset");
    job.points = parse_points(r);
    job.reg = parse_reg(r);
    r.finish();
    return job;
}

DeformJob parse_deform_config(const std::string& json_text) {
    const json doc = parse_json(json_text);
    ObjectReader r(doc, "deform");
    DeformJob job;
    job.dataset_path = r.string("dataset");
    // anchor validation against the domain happens after the dataset is read
    ObjectReader a(r.get("anchor"), r.child_path("anchor"));
    job.anchor.t0 = a.number("t0");
    job.anchor.s0 = a.number("s0");
    job.anchor.lambda1 = a.number("lambda1");
    job.anchor.lambda2 = a.number("lambda2");
    a.finish();
    job.points = parse_points(r);
    job.reg = parse_reg(r);
    job.n_nodes = static_cast<int>(r.integer_or("n_nodes", 101));
    if (job.n_nodes < 2) throw ConfigError(r.child_path("n_nodes") + ": must be >= 2");
    r.finish();
    return job;
}

SmoothJob parse_smooth_config(const std::string& json_text) {
    const json doc = parse_json(json_text);
    ObjectReader r(doc, "smooth");
    SmoothJob job;
    job.learning_dataset_path = r.string("learning_dataset");
    job.new_sheet_path = r.string("new_sheet");
    job.points = parse_points(r);
    job.reg = parse_reg(r);
    job.kernel = r.string_or("kernel", "boxcar");
    job.c_density = r.opt_number("c_density");
    r.finish();
    if (job.kernel != "boxcar" && job.kernel != "biweight_product")
        throw ConfigError(r.child_path("kernel") + ": expected 'boxcar' or 'biweight_product'");
    if (job.c_density && !(*job.c_density > 0.0))
        throw ConfigError(r.child_path("c_density") + ": must be > 0");
    return job;
}

ExperimentConfig parse_experiment_config(const std::string& json_text) {
    const json doc = parse_json(json_text);
    ObjectReader r(doc, "experiment");
    const std::string scenario = r.string("scenario");
    ExperimentConfig config;
    if (scenario == "concentration")
        config = ExperimentConfig::concentration_defaults();
    else if (scenario == "anisotropy")
        config = ExperimentConfig::anisotropy_defaults();
    else if (scenario == "deformation")
        config = ExperimentConfig::deformation_defaults();
    else if (scenario == "risk-scaling")
        config = ExperimentConfig::risk_scaling_defaults();
    else if (scenario == "expansion-checks")
        config = ExperimentConfig::expansion_defaults();
    else
        throw ConfigError(r.child_path("scenario") + ": unknown scenario '" + scenario + "'");

    config.replicates = static_cast<int>(r.integer_or("replicates", config.replicates));
    config.base_seed = r.u64_or("base_seed", config.base_seed);
    if (const json* d = r.find("domain"))
        config.domain = parse_domain(*d, r.child_path("domain"));
    config.h1 = r.number_or("h1", config.h1);
    config.h2 = r.number_or("h2", config.h2);
    config.sigma = r.number_or("sigma", config.sigma);
    config.grid_n1 = static_cast<int>(r.integer_or("grid_n1", config.grid_n1));
    config.grid_n2 = static_cast<int>(r.integer_or("grid_n2", config.grid_n2));
    config.delta = r.number_or("delta", config.delta);
    config.tau = r.number_or("tau", config.tau);
    config.epsilon = r.number_or("epsilon", config.epsilon);
    config.n_values = r.int_list_or("n_values", config.n_values);
    config.tau_values = r.number_list_or("tau_values", config.tau_values);
    config.m0_values = r.int_list_or("m0_values", config.m0_values);
    config.deform_p1 = r.number_or("deform_p1", config.deform_p1);
    config.deform_p2 = r.number_or("deform_p2", config.deform_p2);
    config.eval_n = static_cast<int>(r.integer_or("eval_n", config.eval_n));
    config.deform_eval_n =
        static_cast<int>(r.integer_or("deform_eval_n", config.deform_eval_n));
    config.n_nodes = static_cast<int>(r.integer_or("n_nodes", config.n_nodes));
    config.learn_sheets = static_cast<int>(r.integer_or("learn_sheets", config.learn_sheets));
    config.learn_delta = r.number_or("learn_delta", config.learn_delta);
    r.finish();
    config.validate();
    return config;
}

}  // namespace anisosurf
