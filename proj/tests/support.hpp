#pragma once

#include "pearl/domain.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace pearl::test {

/// Pearson goodness-of-fit p-value; cells with zero expectation must also be empty.
inline double chi_square_p(std::span<const double> observed, std::span<const double> expected) {
    double stat = 0.0;
    int cells = 0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        if (expected[i] == 0.0) {
            if (observed[i] != 0.0) return 0.0;
            continue;
        }
        stat += (observed[i] - expected[i]) * (observed[i] - expected[i]) / expected[i];
        ++cells;
    }
    if (cells < 2) return 1.0;
    boost::math::chi_squared dist(cells - 1);
    return boost::math::cdf(boost::math::complement(dist, stat));
}

/// Chi-square test of homogeneity for a 2 x k table of counts.
inline double homogeneity_p(std::span<const double> a, std::span<const double> b) {
    double na = 0.0, nb = 0.0;
    for (double v : a) na += v;
    for (double v : b) nb += v;
    double stat = 0.0;
    int cols = 0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double col = a[j] + b[j];
        if (col == 0.0) continue;
        const double ea = col * na / (na + nb), eb = col * nb / (na + nb);
        stat += (a[j] - ea) * (a[j] - ea) / ea + (b[j] - eb) * (b[j] - eb) / eb;
        ++cols;
    }
    if (cols < 2) return 1.0;
    boost::math::chi_squared dist(cols - 1);
    return boost::math::cdf(boost::math::complement(dist, stat));
}

/// One-sample Kolmogorov-Smirnov p-value against Uniform(0,1), asymptotic series
/// with the Stephens small-sample correction.
inline double ks_uniform_p(std::vector<double> u) {
    std::sort(u.begin(), u.end());
    const auto n = static_cast<double>(u.size());
    double d = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double lo = u[i] - static_cast<double>(i) / n;
        const double hi = static_cast<double>(i + 1) / n - u[i];
        d = std::max({d, lo, hi});
    }
    const double sn = std::sqrt(n);
    const double lambda = (sn + 0.12 + 0.11 / sn) * d;
    if (lambda < 1e-3) return 1.0;
    double p = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
        p += term;
        if (std::abs(term) < 1e-12) break;
    }
    return std::clamp(p, 0.0, 1.0);
}

inline StepRecord record(int day, std::int64_t morning, std::int64_t evening, std::uint32_t id = 1) {
    return StepRecord{ParticipantId{id}, day, morning, evening};
}

/// Days first..last (day 0 skipped) with the same split every day.
inline std::vector<StepRecord> constant_days(int first, int last, std::int64_t morning, std::int64_t evening,
                                             std::uint32_t id = 1) {
    std::vector<StepRecord> out;
    for (int d = first; d <= last; ++d) {
        if (d != 0) out.push_back(record(d, morning, evening, id));
    }
    return out;
}

/// The standard 30-day pre-study window at a constant level.
inline std::vector<StepRecord> flat_pre_study(std::int64_t total, std::uint32_t id = 1) {
    return constant_days(-30, -1, total / 2, total - total / 2, id);
}

/// Survey whose sub-theme means are exact, using the default question map.
inline CombSurvey survey_with_theme_means(const std::array<int, kThemeCount> &means) {
    CombSurvey s;
    const auto map = QuestionMap::default_map();
    for (int q = 0; q < kSurveyQuestions; ++q) {
        const auto t = static_cast<std::size_t>(map.theme_of[static_cast<std::size_t>(q)]);
        s.responses[static_cast<std::size_t>(q)] = static_cast<std::uint8_t>(means[t]);
    }
    return s;
}

/// Scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string &tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("pearl-" + tag + "-" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir &) = delete;
    TempDir &operator=(const TempDir &) = delete;

    const std::filesystem::path &path() const { return path_; }
    std::filesystem::path operator/(const std::string &name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path &p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

inline void spit(const std::filesystem::path &p, const std::string &text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

} // namespace pearl::test
