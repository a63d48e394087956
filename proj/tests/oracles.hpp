#pragma once

// Independent reference computations used only by tests. None of these
// call into the library's implementation of the quantity they check.

#include <cmath>
#include <cstdlib>
#include <functional>
#include <limits>
#include <vector>

#include "mdls/core.hpp"

namespace oracle {

// Applies the timeliness formula by scanning every span.
inline double timeliness(const std::vector<int>& alarms, const std::vector<mdls::Span>& spans,
                         const mdls::TimelinessConfig& cfg)
{
    if (alarms.empty())
        return 0.0;
    const int t = alarms[0];
    int best = -1;
    int best_dist = std::numeric_limits<int>::max();
    for (int k = 0; k < static_cast<int>(spans.size()); ++k) {
        const int dist = std::abs(t - spans[k].start);
        if (dist < best_dist) {  // strict: ties keep the earlier span
            best_dist = dist;
            best = k;
        }
    }
    const int s = spans[best].start;
    const double discount = std::pow(cfg.gamma, best);
    if (std::abs(t - s) <= cfg.alpha && t <= s)
        return discount * 1.0;
    if (std::abs(t - s) <= cfg.alpha && t > s)
        return discount * cfg.beta;
    return 0.0;
}

struct Macro {
    double accuracy, precision, recall, f1;
};

// labels/preds: 1 = misinformation, 0 = neutral.
inline Macro naive_macro(const std::vector<int>& labels, const std::vector<int>& preds)
{
    const double n = static_cast<double>(labels.size());
    int correct = 0;
    for (std::size_t i = 0; i < labels.size(); ++i)
        correct += labels[i] == preds[i];
    double p_sum = 0, r_sum = 0, f_sum = 0;
    int classes = 0;
    // misinformation first, then neutral, matching the summation order
    for (int cls : {1, 0}) {
        int tp = 0, pred_pos = 0, true_pos = 0;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            tp += labels[i] == cls && preds[i] == cls;
            pred_pos += preds[i] == cls;
            true_pos += labels[i] == cls;
        }
        if (pred_pos == 0 && true_pos == 0)
            continue;
        ++classes;
        const double p = pred_pos ? static_cast<double>(tp) / pred_pos : 0.0;
        const double r = true_pos ? static_cast<double>(tp) / true_pos : 0.0;
        const double f = (p + r) > 0 ? 2 * p * r / (p + r) : 0.0;
        p_sum += p;
        r_sum += r;
        f_sum += f;
    }
    return {correct / n, p_sum / classes, r_sum / classes, f_sum / classes};
}

inline std::vector<double> central_difference(const std::function<double(const std::vector<double>&)>& f,
                                              std::vector<double> x, double h)
{
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double keep = x[i];
        x[i] = keep + h;
        const double up = f(x);
        x[i] = keep - h;
        const double down = f(x);
        x[i] = keep;
        g[i] = (up - down) / (2 * h);
    }
    return g;
}

// ||a - b|| / max(||a||, ||b||), 0 when both vanish.
inline double relative_error(const std::vector<double>& a, const std::vector<double>& b)
{
    double diff = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff += (a[i] - b[i]) * (a[i] - b[i]);
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    const double scale = std::sqrt(std::max(na, nb));
    return scale == 0 ? 0.0 : std::sqrt(diff) / scale;
}

// Straight-line tanh network, weights given as nested vectors.
inline double mlp_forward(const std::vector<std::vector<double>>& w1, const std::vector<double>& b1,
                          const std::vector<double>& w2, double b2, const std::vector<double>& x)
{
    double out = b2;
    for (std::size_t j = 0; j < w1.size(); ++j) {
        double a = b1[j];
        for (std::size_t i = 0; i < x.size(); ++i)
            a += w1[j][i] * x[i];
        out += w2[j] * std::tanh(a);
    }
    return out;
}

// Up-crossings found by marking runs: starts of maximal runs of scores >= theta.
inline std::vector<int> run_starts(const std::vector<double>& scores, double theta)
{
    std::vector<int> out;
    for (std::size_t i = 0; i < scores.size(); ++i)
        if (scores[i] >= theta && (i == 0 || !(scores[i - 1] >= theta)))
            out.push_back(static_cast<int>(i) + 1);
    return out;
}

}  // namespace oracle
