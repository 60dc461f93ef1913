#include "pearl/stats.hpp"
#include "pearl/errors.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

namespace pearl {

namespace {

constexpr std::array<Period, 3> kPeriods{Period::Baseline, Period::Month1, Period::Month2};

struct MeanSd {
    double mean{0.0};
    double sd{0.0};
    std::size_t n{0};
};

MeanSd mean_sd(const std::vector<double> &v) {
    MeanSd r;
    r.n = v.size();
    if (v.empty()) return r;
    r.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v) ss += (x - r.mean) * (x - r.mean);
        r.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
    return r;
}

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

Matrix checked_inverse(const Matrix &a, const char *what) {
    Eigen::ColPivHouseholderQR<Matrix> qr(a);
    if (qr.rank() < a.cols()) throw Singular(std::string(what) + ": design matrix is rank deficient");
    return qr.inverse();
}

std::optional<double> change_score(const ParticipantPeriods &p, Period period) {
    const auto &base = p.mean[static_cast<std::size_t>(Period::Baseline)];
    const auto &post = p.mean[static_cast<std::size_t>(period)];
    if (!base || !post) return std::nullopt;
    return *post - *base;
}

bool arm_present(const TrialLog &log, Arm arm) {
    return std::any_of(log.participants.begin(), log.participants.end(),
                       [&](const ParticipantLog &p) { return p.profile.arm == arm; });
}

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
    return os.str();
}

} // namespace

const PeriodCell *PeriodSummary::find(Arm arm, Period period) const {
    for (const auto &c : cells) {
        if (c.arm == arm && c.period == period) return &c;
    }
    return nullptr;
}

std::vector<ParticipantPeriods> participant_period_means(const TrialLog &log) {
    std::vector<ParticipantPeriods> out;
    out.reserve(log.participants.size());
    for (const auto &p : log.participants) {
        ParticipantPeriods pp;
        pp.id = p.profile.id;
        pp.arm = p.profile.arm;
        std::array<double, 3> sum{};
        std::array<int, 3> days{};
        for (const auto &r : p.steps) {
            const auto period = period_of(r.day);
            if (!period || r.total_steps() < kWearThreshold) continue;
            const auto k = static_cast<std::size_t>(*period);
            sum[k] += static_cast<double>(r.total_steps());
            ++days[k];
        }
        for (std::size_t k = 0; k < 3; ++k) {
            if (days[k] >= kCompliantDays) pp.mean[k] = sum[k] / days[k];
        }
        out.push_back(pp);
    }
    return out;
}

PeriodSummary summarize_periods(const TrialLog &log) {
    const auto means = participant_period_means(log);
    PeriodSummary s;
    for (auto arm : kAllArms) {
        for (auto period : kPeriods) {
            std::vector<double> v;
            for (const auto &m : means) {
                if (m.arm == arm && m.mean[static_cast<std::size_t>(period)]) v.push_back(*m.mean[static_cast<std::size_t>(period)]);
            }
            if (v.empty()) continue;
            const auto ms = mean_sd(v);
            s.cells.push_back({arm, period, ms.mean, ms.sd, ms.n});
        }
    }
    for (auto period : kPeriods) {
        std::vector<double> v;
        for (const auto &m : means) {
            if (m.mean[static_cast<std::size_t>(period)]) v.push_back(*m.mean[static_cast<std::size_t>(period)]);
        }
        if (v.empty()) continue;
        const auto ms = mean_sd(v);
        s.total.push_back({Arm::Control, period, ms.mean, ms.sd, ms.n});
    }
    return s;
}

double normal_two_sided_p(double z) {
    if (std::isnan(z)) return 1.0;
    return std::erfc(std::abs(z) / std::sqrt(2.0));
}

RegressionResult did_change_scores(std::span<const double> treated, std::span<const double> control,
                                   const std::vector<std::vector<double>> &covariates) {
    if (treated.size() < 2 || control.size() < 2) {
        throw DegenerateDesign("difference-in-differences needs at least two participants per arm");
    }
    const auto n = treated.size() + control.size();
    const auto k = 2 + covariates.size();
    for (const auto &c : covariates) {
        if (c.size() != n) throw DegenerateDesign("covariate length does not match the number of participants");
    }
    Matrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
    Vector y(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        const bool is_treated = i < treated.size();
        y(r) = is_treated ? treated[i] : control[i - treated.size()];
        x(r, 0) = 1.0;
        x(r, 1) = is_treated ? 1.0 : 0.0;
        for (std::size_t j = 0; j < covariates.size(); ++j) x(r, static_cast<Eigen::Index>(2 + j)) = covariates[j][i];
    }
    if (n <= k) throw DegenerateDesign("difference-in-differences has no residual degrees of freedom");
    const Matrix xtx_inv = checked_inverse(x.transpose() * x, "did_regression");
    const Vector beta = xtx_inv * (x.transpose() * y);
    const Vector e = y - x * beta;
    const Matrix meat = x.transpose() * e.array().square().matrix().asDiagonal() * x;
    const double hc1 = static_cast<double>(n) / static_cast<double>(n - k);
    const Matrix cov = hc1 * xtx_inv * meat * xtx_inv;

    RegressionResult r;
    r.estimate = beta(1);
    r.se = std::sqrt(std::max(cov(1, 1), 0.0));
    r.p_value = r.se > 0.0 ? normal_two_sided_p(r.estimate / r.se) : (r.estimate == 0.0 ? 1.0 : 0.0);
    r.n_treated = treated.size();
    r.n_control = control.size();
    return r;
}

RegressionResult did_regression(const TrialLog &log, Arm treated, Arm control, Period period, const DidOptions &opts) {
    if (period == Period::Baseline) throw DegenerateDesign("did_regression compares a study month with baseline");
    const auto means = participant_period_means(log);
    std::vector<double> yt, yc;
    std::vector<const ParticipantLog *> who_t, who_c;
    for (std::size_t i = 0; i < means.size(); ++i) {
        const auto change = change_score(means[i], period);
        if (!change) continue;
        if (means[i].arm == treated) {
            yt.push_back(*change);
            who_t.push_back(&log.participants[i]);
        } else if (means[i].arm == control) {
            yc.push_back(*change);
            who_c.push_back(&log.participants[i]);
        }
    }
    std::vector<std::vector<double>> cov;
    for (const auto &f : opts.covariates) {
        std::vector<double> col;
        for (const auto *p : who_t) col.push_back(f(*p));
        for (const auto *p : who_c) col.push_back(f(*p));
        cov.push_back(std::move(col));
    }
    auto r = did_change_scores(yt, yc, cov);
    r.label = comparison_label(treated, control);
    r.period = period;
    return r;
}

std::vector<double> bh_adjust(std::span<const double> pvalues) {
    const auto m = pvalues.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return pvalues[a] < pvalues[b]; });
    std::vector<double> out(m);
    double running = 1.0;
    for (std::size_t r = m; r-- > 0;) {
        const auto i = order[r];
        running = std::min(running, static_cast<double>(m) * pvalues[i] / static_cast<double>(r + 1));
        out[i] = std::min(running, 1.0);
    }
    return out;
}

GeeResult gee_fit(const GeeData &data, const GeeOptions &opts) {
    const auto n = data.rows();
    const auto p = data.cols();
    if (data.x.size() != n * p || data.cluster.size() != n) throw DegenerateDesign("GEE data dimensions do not agree");

    // Cluster boundaries.
    std::vector<std::size_t> start{0};
    for (std::size_t i = 1; i < n; ++i) {
        if (data.cluster[i] != data.cluster[i - 1]) start.push_back(i);
    }
    if (n == 0) start.clear();
    start.push_back(n);
    const auto clusters = start.size() - 1;
    if (clusters < 2) throw InsufficientData("GEE needs at least two clusters");
    std::size_t max_size = 0;
    double pairs = 0.0;
    for (std::size_t c = 0; c < clusters; ++c) {
        const auto m = start[c + 1] - start[c];
        max_size = std::max(max_size, m);
        pairs += 0.5 * static_cast<double>(m) * static_cast<double>(m - 1);
    }

    const auto np = static_cast<Eigen::Index>(p);
    const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> x(
        data.x.data(), static_cast<Eigen::Index>(n), np);
    const Eigen::Map<const Vector> y(data.y.data(), static_cast<Eigen::Index>(n));
    if (n <= p) throw Singular("GEE has no residual degrees of freedom");
    {
        Eigen::ColPivHouseholderQR<Matrix> qr(x);
        if (qr.rank() < np) throw Singular("GEE design matrix is rank deficient");
    }

    // Per-cluster sufficient statistics that do not depend on rho.
    std::vector<Matrix> xtx(clusters);
    std::vector<Vector> xsum(clusters);
    for (std::size_t c = 0; c < clusters; ++c) {
        const auto b = static_cast<Eigen::Index>(start[c]);
        const auto m = static_cast<Eigen::Index>(start[c + 1] - start[c]);
        const auto xi = x.middleRows(b, m);
        xtx[c] = xi.transpose() * xi;
        xsum[c] = xi.colwise().sum().transpose();
    }

    const double rho_floor = max_size > 1 ? -1.0 / static_cast<double>(max_size - 1) + 1e-6 : -1.0 + 1e-6;
    const double rho_ceiling = 1.0 - 1e-6;

    // R^{-1} = (I - c J) / (1 - rho) with c = rho / (1 + (m-1) rho).
    auto gls = [&](double rho, Vector &beta_out, Matrix &bread_inv) {
        Matrix a = Matrix::Zero(np, np);
        Vector bvec = Vector::Zero(np);
        for (std::size_t c = 0; c < clusters; ++c) {
            const auto b = static_cast<Eigen::Index>(start[c]);
            const auto m = static_cast<Eigen::Index>(start[c + 1] - start[c]);
            const double cc = rho / (1.0 + static_cast<double>(m - 1) * rho);
            const double scale = 1.0 / (1.0 - rho);
            const auto xi = x.middleRows(b, m);
            const auto yi = y.segment(b, m);
            a += scale * (xtx[c] - cc * xsum[c] * xsum[c].transpose());
            bvec += scale * (xi.transpose() * yi - cc * xsum[c] * yi.sum());
        }
        bread_inv = checked_inverse(a, "gee_fit");
        beta_out = bread_inv * bvec;
    };

    auto moments = [&](const Vector &beta, double &phi, double &rho) {
        const Vector e = y - x * beta;
        phi = e.squaredNorm() / static_cast<double>(n - p);
        double cross = 0.0;
        for (std::size_t c = 0; c < clusters; ++c) {
            const auto b = static_cast<Eigen::Index>(start[c]);
            const auto m = static_cast<Eigen::Index>(start[c + 1] - start[c]);
            const auto ei = e.segment(b, m);
            const double s = ei.sum();
            cross += 0.5 * (s * s - ei.squaredNorm());
        }
        const double denom = phi * (pairs - static_cast<double>(p));
        rho = (pairs > static_cast<double>(p) && phi > 0.0) ? cross / denom : 0.0;
        rho = std::clamp(rho, rho_floor, rho_ceiling);
    };

    GeeResult res;
    res.clusters = clusters;
    res.observations = n;
    Vector beta;
    Matrix bread_inv;
    double rho = opts.fixed_rho.value_or(0.0);
    double phi = 0.0;
    gls(rho, beta, bread_inv);
    bool converged = opts.fixed_rho.has_value();
    int iter = 1;
    while (!converged) {
        if (iter >= opts.max_iterations) throw NoConvergence("GEE did not converge within the iteration limit");
        moments(beta, phi, rho);
        Vector next;
        gls(rho, next, bread_inv);
        const double change = (next - beta).cwiseAbs().maxCoeff();
        beta = next;
        ++iter;
        converged = change < opts.tolerance;
    }
    {
        double rho_next = 0.0;
        moments(beta, phi, rho_next);
    }

    // Robust sandwich: bread^{-1} (sum u_i u_i') bread^{-1}.
    const Vector e = y - x * beta;
    Matrix meat = Matrix::Zero(np, np);
    for (std::size_t c = 0; c < clusters; ++c) {
        const auto b = static_cast<Eigen::Index>(start[c]);
        const auto m = static_cast<Eigen::Index>(start[c + 1] - start[c]);
        const double cc = rho / (1.0 + static_cast<double>(m - 1) * rho);
        const auto xi = x.middleRows(b, m);
        const auto ei = e.segment(b, m);
        const Vector u = (xi.transpose() * ei - cc * xsum[c] * ei.sum()) / (1.0 - rho);
        meat += u * u.transpose();
    }
    const Matrix cov = bread_inv * meat * bread_inv;

    res.rho = rho;
    res.scale = phi;
    res.iterations = iter;
    for (std::size_t j = 0; j < p; ++j) {
        GeeTerm t;
        t.name = data.names[j];
        t.estimate = beta(static_cast<Eigen::Index>(j));
        t.se = std::sqrt(std::max(cov(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)), 0.0));
        t.ci_low = t.estimate - 1.96 * t.se;
        t.ci_high = t.estimate + 1.96 * t.se;
        t.p_value = t.se > 0.0 ? normal_two_sided_p(t.estimate / t.se) : 1.0;
        res.terms.push_back(std::move(t));
    }
    return res;
}

GeeData gee_design(const TrialLog &log) {
    std::vector<Arm> dummies;
    for (auto arm : {Arm::Random, Arm::Fixed, Arm::RL}) {
        if (arm_present(log, arm)) dummies.push_back(arm);
    }
    GeeData d;
    d.names.push_back("(Intercept)");
    for (auto a : dummies) d.names.push_back("Treatment Arm: " + std::string(arm_name(a)));
    d.names.push_back("Day in study");
    for (auto a : dummies) d.names.push_back("Treatment Arm: " + std::string(arm_name(a)) + " x study day");

    for (const auto &p : log.participants) {
        for (const auto &r : p.steps) {
            if (r.day < 1 || r.total_steps() < kWearThreshold) continue;
            d.cluster.push_back(p.profile.id.value);
            d.y.push_back(static_cast<double>(r.total_steps()));
            d.x.push_back(1.0);
            for (auto a : dummies) d.x.push_back(p.profile.arm == a ? 1.0 : 0.0);
            d.x.push_back(r.day);
            for (auto a : dummies) d.x.push_back(p.profile.arm == a ? r.day : 0.0);
        }
    }
    return d;
}

GeeResult gee_fit(const TrialLog &log, const GeeOptions &opts) { return gee_fit(gee_design(log), opts); }

std::vector<DailyMean> daily_means(const TrialLog &log) {
    std::map<std::pair<int, int>, std::pair<double, std::size_t>> acc;
    for (const auto &p : log.participants) {
        for (const auto &r : p.steps) {
            if (r.day < 1 || r.total_steps() < kWearThreshold) continue;
            auto &cell = acc[{static_cast<int>(p.profile.arm), r.day}];
            cell.first += static_cast<double>(r.total_steps());
            ++cell.second;
        }
    }
    std::vector<DailyMean> out;
    for (const auto &[key, v] : acc) {
        out.push_back({static_cast<Arm>(key.first), key.second, v.first / static_cast<double>(v.second), v.second});
    }
    return out;
}

std::string comparison_label(Arm treated, Arm control) {
    return std::string(arm_name(treated)) + " vs. " + std::string(arm_name(control));
}

AnalysisResults analyze(const TrialLog &log) {
    AnalysisResults res;
    res.study_days = log.study_days;
    for (auto a : kAllArms) {
        if (arm_present(log, a)) res.arms.push_back(a);
    }
    res.summary = summarize_periods(log);

    struct Pair {
        Arm treated, control;
        bool primary;
    };
    const std::array<Pair, 6> pairs{{{Arm::Random, Arm::Control, true},
                                     {Arm::Fixed, Arm::Control, false},
                                     {Arm::RL, Arm::Control, false},
                                     {Arm::Fixed, Arm::Random, true},
                                     {Arm::RL, Arm::Random, true},
                                     {Arm::RL, Arm::Fixed, true}}};
    std::vector<std::size_t> primary;
    for (auto period : {Period::Month1, Period::Month2}) {
        for (const auto &pr : pairs) {
            if (!arm_present(log, pr.treated) || !arm_present(log, pr.control)) continue;
            const auto *t = res.summary.find(pr.treated, period);
            const auto *c = res.summary.find(pr.control, period);
            if (!t || !c || t->n < 2 || c->n < 2) continue;
            res.comparisons.push_back(did_regression(log, pr.treated, pr.control, period));
            if (pr.primary && period == Period::Month2) primary.push_back(res.comparisons.size() - 1);
        }
    }
    if (res.comparisons.empty()) {
        throw DegenerateDesign("difference-in-differences needs two arms with compliant study-period data");
    }
    std::vector<double> ps;
    for (auto i : primary) ps.push_back(res.comparisons[i].p_value);
    const auto adj = bh_adjust(ps);
    for (std::size_t k = 0; k < primary.size(); ++k) res.comparisons[primary[k]].adjusted_p = adj[k];

    res.gee = gee_fit(log);
    res.daily = daily_means(log);
    return res;
}

std::string AnalysisResults::to_json() const {
    nlohmann::ordered_json j;
    j["format"] = "pearl.results";
    j["version"] = "1.0";
    j["study_days"] = study_days;
    auto &a = j["arms"] = nlohmann::ordered_json::array();
    for (auto arm : arms) a.push_back(arm_name(arm));

    auto cell_json = [](const PeriodCell &c, const char *arm) {
        nlohmann::ordered_json o;
        o["arm"] = arm;
        o["period"] = period_name(c.period);
        o["mean"] = c.mean;
        o["sd"] = c.sd;
        o["n"] = c.n;
        return o;
    };
    auto &t3 = j["period_summary"] = nlohmann::ordered_json::array();
    for (const auto &c : summary.cells) t3.push_back(cell_json(c, std::string(arm_name(c.arm)).c_str()));
    for (const auto &c : summary.total) t3.push_back(cell_json(c, "Total"));

    auto &t4 = j["comparisons"] = nlohmann::ordered_json::object();
    for (const auto &r : comparisons) {
        nlohmann::ordered_json o;
        o["estimate"] = r.estimate;
        o["se"] = r.se;
        o["p_value"] = r.p_value;
        if (r.adjusted_p) o["adjusted_p"] = *r.adjusted_p;
        o["n_treated"] = r.n_treated;
        o["n_control"] = r.n_control;
        t4[r.label + " (" + std::string(period_name(r.period)) + ")"] = o;
        t4[r.label + " (" + std::string(period_name(r.period)) + ")"]["label"] = r.label;
        t4[r.label + " (" + std::string(period_name(r.period)) + ")"]["period"] = period_name(r.period);
    }

    auto &g = j["gee"];
    g["rho"] = gee.rho;
    g["scale"] = gee.scale;
    g["iterations"] = gee.iterations;
    g["clusters"] = gee.clusters;
    g["observations"] = gee.observations;
    auto &terms = g["terms"] = nlohmann::ordered_json::array();
    for (const auto &t : gee.terms) {
        terms.push_back({{"name", t.name},
                         {"estimate", t.estimate},
                         {"se", t.se},
                         {"ci_low", t.ci_low},
                         {"ci_high", t.ci_high},
                         {"p_value", t.p_value}});
    }

    auto &dm = j["daily_means"] = nlohmann::ordered_json::array();
    for (const auto &d : daily) dm.push_back({{"arm", arm_name(d.arm)}, {"day", d.day}, {"mean", d.mean}, {"n", d.n}});
    return j.dump(2);
}

AnalysisResults AnalysisResults::from_json(const std::string &text) {
    nlohmann::ordered_json j;
    try {
        j = nlohmann::ordered_json::parse(text);
    } catch (const nlohmann::json::exception &e) {
        throw SchemaError(std::string("results are not valid JSON: ") + e.what());
    }
    if (!j.is_object() || j.value("format", "") != "pearl.results") throw SchemaError("not a results document");
    const auto version = j.value("version", "");
    if (version.substr(0, version.find('.')) != "1") throw SchemaError("unsupported results version " + version);

    auto arm_of = [](const nlohmann::ordered_json &v) {
        const auto a = parse_arm(v.get<std::string>());
        if (!a) throw SchemaError("unknown arm " + v.get<std::string>());
        return *a;
    };
    auto period_of_name = [](const std::string &s) {
        for (auto p : kPeriods) {
            if (period_name(p) == s) return p;
        }
        throw SchemaError("unknown period " + s);
    };

    AnalysisResults r;
    try {
        r.study_days = j.at("study_days").get<int>();
        for (const auto &a : j.at("arms")) r.arms.push_back(arm_of(a));
        for (const auto &c : j.at("period_summary")) {
            PeriodCell cell;
            cell.period = period_of_name(c.at("period").get<std::string>());
            cell.mean = c.at("mean").get<double>();
            cell.sd = c.at("sd").get<double>();
            cell.n = c.at("n").get<std::size_t>();
            if (c.at("arm").get<std::string>() == "Total") {
                r.summary.total.push_back(cell);
            } else {
                cell.arm = arm_of(c.at("arm"));
                r.summary.cells.push_back(cell);
            }
        }
        for (const auto &[key, c] : j.at("comparisons").items()) {
            RegressionResult rr;
            rr.label = c.at("label").get<std::string>();
            rr.period = period_of_name(c.at("period").get<std::string>());
            rr.estimate = c.at("estimate").get<double>();
            rr.se = c.at("se").get<double>();
            rr.p_value = c.at("p_value").get<double>();
            if (c.contains("adjusted_p")) rr.adjusted_p = c.at("adjusted_p").get<double>();
            rr.n_treated = c.at("n_treated").get<std::size_t>();
            rr.n_control = c.at("n_control").get<std::size_t>();
            r.comparisons.push_back(rr);
        }
        const auto &g = j.at("gee");
        r.gee.rho = g.at("rho").get<double>();
        r.gee.scale = g.at("scale").get<double>();
        r.gee.iterations = g.at("iterations").get<int>();
        r.gee.clusters = g.at("clusters").get<std::size_t>();
        r.gee.observations = g.at("observations").get<std::size_t>();
        for (const auto &t : g.at("terms")) {
            r.gee.terms.push_back({t.at("name").get<std::string>(), t.at("estimate").get<double>(),
                                   t.at("se").get<double>(), t.at("ci_low").get<double>(),
                                   t.at("ci_high").get<double>(), t.at("p_value").get<double>()});
        }
        for (const auto &d : j.at("daily_means")) {
            r.daily.push_back({arm_of(d.at("arm")), d.at("day").get<int>(), d.at("mean").get<double>(),
                               d.at("n").get<std::size_t>()});
        }
    } catch (const nlohmann::json::exception &e) {
        throw SchemaError(std::string("malformed results document: ") + e.what());
    }
    return r;
}

void write_table3_csv(std::ostream &out, const PeriodSummary &summary) {
    out << "arm,period,mean_steps,sd_steps,n\n";
    auto row = [&](const std::string &arm, const PeriodCell &c) {
        out << arm << ',' << period_name(c.period) << ',' << fmt(c.mean) << ',' << fmt(c.sd) << ',' << c.n << '\n';
    };
    for (const auto &c : summary.cells) row(std::string(arm_name(c.arm)), c);
    for (const auto &c : summary.total) row("Total", c);
}

void write_table4_csv(std::ostream &out, const std::vector<RegressionResult> &rows) {
    out << "comparison,period,estimate,se,p_value,adjusted_p,n_treated,n_control\n";
    for (const auto &r : rows) {
        out << r.label << ',' << period_name(r.period) << ',' << fmt(r.estimate) << ',' << fmt(r.se) << ','
            << fmt(r.p_value) << ',' << (r.adjusted_p ? fmt(*r.adjusted_p) : "") << ',' << r.n_treated << ','
            << r.n_control << '\n';
    }
}

void write_table6_csv(std::ostream &out, const GeeResult &gee) {
    out << "term,estimate,se,ci_low,ci_high,p_value\n";
    for (const auto &t : gee.terms) {
        out << '"' << t.name << '"' << ',' << fmt(t.estimate) << ',' << fmt(t.se) << ',' << fmt(t.ci_low) << ','
            << fmt(t.ci_high) << ',' << fmt(t.p_value) << '\n';
    }
}

} // namespace pearl
