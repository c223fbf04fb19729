#include "phsm/classify.hpp"

#include "phsm/hermitian.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>

namespace phsm::classify {

HAlpha h_alpha(const Matrix3c& t) {
    const Matrix3c h = hermitian_part(t);
    const double trace = h.trace().real();
    if (!(trace > 0.0)) return {};
    Eigen::SelfAdjointEigenSolver<Matrix3c> solver(h);
    const auto& values = solver.eigenvalues();
    const auto& vectors = solver.eigenvectors();
    double lambda[3];
    double sum = 0.0;
    for (int i = 0; i < 3; ++i) {
        lambda[i] = std::max(0.0, values(i));
        sum += lambda[i];
    }
    if (!(sum > 0.0)) return {};
    HAlpha out;
    for (int i = 0; i < 3; ++i) {
        const double p = lambda[i] / sum;
        if (p > 0.0) out.entropy -= p * std::log(p) / std::log(3.0);
        const double first = std::min(1.0, std::abs(vectors(0, i)));
        out.alpha_deg += p * std::acos(first) * 180.0 / kPi;
    }
    out.entropy = std::clamp(out.entropy, 0.0, 1.0);
    out.alpha_deg = std::clamp(out.alpha_deg, 0.0, 90.0);
    return out;
}

HAlphaField h_alpha(const CoherencyImage& img) {
    HAlphaField f{ScalarRaster(img.width(), img.height()), ScalarRaster(img.width(), img.height())};
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
        const HAlpha ha = h_alpha(img.pixels[i]);
        f.entropy[i] = ha.entropy;
        f.alpha[i] = ha.alpha_deg;
    }
    return f;
}

int zone_of(double entropy, double alpha_deg, const ZoneBounds& b) {
    auto band = [&](const double (&split)[2]) { return alpha_deg <= split[0] ? 0 : (alpha_deg <= split[1] ? 1 : 2); };
    if (entropy < b.h_low) return band(b.low_alpha);
    if (entropy < b.h_high) return 3 + band(b.mid_alpha);
    const int a = band(b.high_alpha);
    if (a == 0) return b.nine_zones ? 8 : 6;
    return 5 + a;
}

int zone_count(const ZoneBounds& bounds) { return bounds.nine_zones ? 9 : 8; }

ClassMap init_zones(const HAlphaField& field, const ZoneBounds& bounds) {
    if (!field.entropy.same_shape(field.alpha)) throw Error("H and alpha rasters differ in shape");
    ClassMap map;
    map.labels = LabelRaster(field.entropy.width(), field.entropy.height());
    map.class_count = zone_count(bounds);
    for (std::size_t i = 0; i < map.labels.size(); ++i) map.labels[i] = zone_of(field.entropy[i], field.alpha[i], bounds);
    return map;
}

std::vector<Matrix3c> class_centers(const CoherencyImage& img, const LabelRaster& labels, int class_count) {
    if (!labels.same_shape(img.pixels)) throw Error("class map shape differs from image");
    std::vector<Matrix3c> sums(static_cast<std::size_t>(class_count), Matrix3c::Zero());
    std::vector<std::int64_t> counts(static_cast<std::size_t>(class_count), 0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int c = labels[i];
        if (c < 0 || c >= class_count) throw Error("class label out of range");
        sums[static_cast<std::size_t>(c)] += img.pixels[i];
        ++counts[static_cast<std::size_t>(c)];
    }
    for (std::size_t c = 0; c < sums.size(); ++c) {
        if (counts[c] > 0) sums[c] /= static_cast<double>(counts[c]);
    }
    return sums;
}

double wishart_distance(const Matrix3c& t, const Matrix3c& v_inverse, double log_det_v) {
    return log_det_v + (v_inverse * t).trace().real();
}

namespace {

struct PreparedCenters {
    std::vector<Matrix3c> inverse;
    std::vector<double> log_det;
};

PreparedCenters prepare(const std::vector<Matrix3c>& centers) {
    PreparedCenters p;
    for (const Matrix3c& v : centers) {
        p.inverse.push_back(loaded_inverse(v));
        p.log_det.push_back(loaded_log_det(v));
    }
    return p;
}

}  // namespace

LabelRaster assign_classes(const CoherencyImage& img, const std::vector<Matrix3c>& centers) {
    if (centers.empty()) throw Error("no class centers");
    const PreparedCenters p = prepare(centers);
    LabelRaster out(img.width(), img.height());
    for (std::size_t i = 0; i < out.size(); ++i) {
        int best = 0;
        double best_d = wishart_distance(img.pixels[i], p.inverse[0], p.log_det[0]);
        for (std::size_t c = 1; c < centers.size(); ++c) {
            const double d = wishart_distance(img.pixels[i], p.inverse[c], p.log_det[c]);
            if (d < best_d) {
                best_d = d;
                best = static_cast<int>(c);
            }
        }
        out[i] = best;
    }
    return out;
}

double wishart_objective(const CoherencyImage& img, const LabelRaster& labels, const std::vector<Matrix3c>& centers) {
    const PreparedCenters p = prepare(centers);
    double sum = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const auto c = static_cast<std::size_t>(labels[i]);
        sum += wishart_distance(img.pixels[i], p.inverse[c], p.log_det[c]);
    }
    return sum;
}

int compact_classes(LabelRaster& labels, int class_count) {
    std::vector<int> used(static_cast<std::size_t>(class_count), 0);
    for (auto v : labels.data()) {
        if (v < 0 || v >= class_count) throw Error("class label out of range");
        used[static_cast<std::size_t>(v)] = 1;
    }
    std::vector<int> remap(static_cast<std::size_t>(class_count), -1);
    int next = 0;
    for (int c = 0; c < class_count; ++c)
        if (used[static_cast<std::size_t>(c)]) remap[static_cast<std::size_t>(c)] = next++;
    for (auto& v : labels.data()) v = remap[static_cast<std::size_t>(v)];
    return next;
}

WishartResult wishart_iterate(const CoherencyImage& img, const ClassMap& init, const WishartOptions& opts) {
    if (!init.labels.same_shape(img.pixels)) throw Error("class map shape differs from image");
    WishartResult result;
    LabelRaster labels = init.labels;
    int count = compact_classes(labels, init.class_count);
    if (count == 0) throw Error("initial class map is empty");
    const double limit = opts.min_change * static_cast<double>(labels.size());
    for (int it = 0; it < opts.max_iterations; ++it) {
        const auto centers = class_centers(img, labels, count);
        LabelRaster next = assign_classes(img, centers);
        std::int64_t changed = 0;
        for (std::size_t i = 0; i < next.size(); ++i) changed += next[i] != labels[i];
        labels = std::move(next);
        count = compact_classes(labels, count);
        result.changes.push_back(changed);
        result.iterations = it + 1;
        if (static_cast<double>(changed) < limit || changed == 0) break;
    }
    result.map.labels = std::move(labels);
    result.map.class_count = count;
    result.map.centers = class_centers(img, result.map.labels, count);
    return result;
}

ClassMap semantic_vote(const ClassMap& classes, const LabelRaster& region_id) {
    if (!classes.labels.same_shape(region_id)) throw Error("segmentation shape differs from class map");
    std::map<int, std::vector<std::int64_t>> votes;
    for (std::size_t i = 0; i < region_id.size(); ++i) {
        auto& v = votes[region_id[i]];
        if (v.empty()) v.assign(static_cast<std::size_t>(classes.class_count), 0);
        const int c = classes.labels[i];
        if (c < 0 || c >= classes.class_count) throw Error("class label out of range");
        ++v[static_cast<std::size_t>(c)];
    }
    std::map<int, int> winner;
    for (const auto& [region, v] : votes) {
        winner[region] = static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
    }
    ClassMap out = classes;
    for (std::size_t i = 0; i < region_id.size(); ++i) out.labels[i] = winner[region_id[i]];
    return out;
}

int connected_components(const LabelRaster& labels) {
    Raster<std::uint8_t> seen(labels.width(), labels.height(), 0);
    std::vector<Pixel> stack;
    int components = 0;
    for (int y = 0; y < labels.height(); ++y) {
        for (int x = 0; x < labels.width(); ++x) {
            if (seen.at(x, y)) continue;
            ++components;
            const int value = labels.at(x, y);
            seen.at(x, y) = 1;
            stack.push_back({x, y});
            while (!stack.empty()) {
                const Pixel p = stack.back();
                stack.pop_back();
                const Pixel next[4] = {{p.x - 1, p.y}, {p.x + 1, p.y}, {p.x, p.y - 1}, {p.x, p.y + 1}};
                for (Pixel q : next) {
                    if (!labels.contains(q.x, q.y) || seen.at(q.x, q.y) || labels.at(q.x, q.y) != value) continue;
                    seen.at(q.x, q.y) = 1;
                    stack.push_back(q);
                }
            }
        }
    }
    return components;
}

namespace {

void check_pair(const LabelRaster& predicted, const LabelRaster& truth) {
    if (!predicted.same_shape(truth)) throw Error("truth shape differs from class map");
    for (auto v : predicted.data())
        if (v < 0) throw Error("negative predicted class");
}

int label_limit(const LabelRaster& r, int ignore_label) {
    int n = 0;
    for (auto v : r.data()) {
        if (v == ignore_label) continue;
        if (v < 0) throw Error("negative truth class");
        n = std::max(n, v + 1);
    }
    return n;
}

}  // namespace

std::vector<int> greedy_mapping(const LabelRaster& predicted, const LabelRaster& truth, int ignore_label) {
    check_pair(predicted, truth);
    const int np = label_limit(predicted, kIgnoreLabel - 1);
    const int nt = label_limit(truth, ignore_label);
    std::vector<std::vector<std::int64_t>> overlap(static_cast<std::size_t>(np), std::vector<std::int64_t>(static_cast<std::size_t>(nt), 0));
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] == ignore_label) continue;
        ++overlap[static_cast<std::size_t>(predicted[i])][static_cast<std::size_t>(truth[i])];
    }
    std::vector<int> mapping(static_cast<std::size_t>(np), -1);
    for (std::size_t p = 0; p < overlap.size(); ++p) {
        std::int64_t best = 0;
        for (std::size_t t = 0; t < overlap[p].size(); ++t) {
            if (overlap[p][t] > best) {
                best = overlap[p][t];
                mapping[p] = static_cast<int>(t);
            }
        }
    }
    return mapping;
}

Confusion evaluate(const LabelRaster& predicted, const LabelRaster& truth, std::vector<int> mapping, int ignore_label) {
    check_pair(predicted, truth);
    if (mapping.empty()) mapping = greedy_mapping(predicted, truth, ignore_label);
    Confusion c;
    c.truth_classes = label_limit(truth, ignore_label);
    c.predicted_classes = label_limit(predicted, kIgnoreLabel - 1);
    if (static_cast<int>(mapping.size()) < c.predicted_classes) throw Error("mapping does not cover every predicted class");
    const auto nt = static_cast<std::size_t>(c.truth_classes);
    // The extra last column collects pixels of unmapped classes.
    c.counts.assign(nt, std::vector<std::int64_t>(nt + 1, 0));
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] == ignore_label) continue;
        const int m = mapping[static_cast<std::size_t>(predicted[i])];
        const std::size_t col = (m >= 0 && m < c.truth_classes) ? static_cast<std::size_t>(m) : nt;
        ++c.counts[static_cast<std::size_t>(truth[i])][col];
        ++c.counted;
    }
    c.mapping = std::move(mapping);
    c.class_accuracy.assign(nt, 0.0);
    std::int64_t correct = 0;
    int present = 0;
    double sum = 0.0;
    for (std::size_t t = 0; t < nt; ++t) {
        std::int64_t row = 0;
        for (auto v : c.counts[t]) row += v;
        correct += c.counts[t][t];
        if (row == 0) continue;
        c.class_accuracy[t] = 100.0 * static_cast<double>(c.counts[t][t]) / static_cast<double>(row);
        sum += c.class_accuracy[t];
        ++present;
    }
    c.average_accuracy = present > 0 ? sum / present : 0.0;
    c.overall_accuracy = c.counted > 0 ? 100.0 * static_cast<double>(correct) / static_cast<double>(c.counted) : 0.0;
    return c;
}

std::string Confusion::to_csv() const {
    std::ostringstream out;
    out << std::fixed << std::setprecision(2);
    out << "truth";
    for (int t = 0; t < truth_classes; ++t) out << ",class_" << t;
    out << ",unmapped,pixels,accuracy\n";
    for (int t = 0; t < truth_classes; ++t) {
        const auto& row = counts[static_cast<std::size_t>(t)];
        std::int64_t n = 0;
        for (auto v : row) n += v;
        out << "class_" << t;
        for (auto v : row) out << ',' << (n > 0 ? 100.0 * static_cast<double>(v) / static_cast<double>(n) : 0.0);
        out << ',' << n << ',' << class_accuracy[static_cast<std::size_t>(t)] << '\n';
    }
    out << "average,";
    for (int t = 0; t <= truth_classes; ++t) out << ',';
    out << counted << ',' << average_accuracy << '\n';
    out << "overall,";
    for (int t = 0; t <= truth_classes; ++t) out << ',';
    out << counted << ',' << overall_accuracy << '\n';
    return out.str();
}

}  // namespace phsm::classify
