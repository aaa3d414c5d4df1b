#include "respir/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "respir/hilbert.hpp"

namespace respir {

FeatureVector compute_features(const std::vector<double>& series,
                               const std::vector<double>& source) {
    const std::size_t n = series.size();
    if (n < 2) throw FeatureError("series must have at least 2 samples");
    if (source.size() != n) {
        throw FeatureError("series and source must have the same length");
    }

    FeatureVector f;
    const double nd = static_cast<double>(n);

    double sum = 0.0;
    f.maximum = series[0];
    f.minimum = series[0];
    for (double v : series) {
        sum += v;
        f.energy += v * v;
        f.maximum = std::max(f.maximum, v);
        f.minimum = std::min(f.minimum, v);
    }
    f.mean = sum / nd;

    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : series) {
        const double c = v - f.mean;
        const double c2 = c * c;
        m2 += c2;
        m3 += c2 * c;
        m4 += c2 * c2;
    }
    m2 /= nd;
    m3 /= nd;
    m4 /= nd;
    f.variance = m2;
    f.std_dev = std::sqrt(m2);
    f.third_central_moment = m3;
    f.fourth_cumulant = m4 - 3.0 * m2 * m2;

    std::vector<double> sorted = series;
    std::sort(sorted.begin(), sorted.end());
    f.median = n % 2 == 1 ? sorted[n / 2]
                          : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);

    if (f.maximum > f.minimum) {
        constexpr int kBins = 100;
        const double width = (f.maximum - f.minimum) / kBins;
        std::array<int, kBins> hist{};
        for (double v : series) {
            int bin = static_cast<int>((v - f.minimum) / width);
            bin = std::clamp(bin, 0, kBins - 1);
            ++hist[bin];
        }
        int best = 0;  // ties resolve to the lowest bin
        for (int b = 1; b < kBins; ++b) {
            if (hist[b] > hist[best]) best = b;
        }
        f.mode_binned = f.minimum + (best + 0.5) * width;
    } else {
        f.mode_binned = f.maximum;  // constant series: the constant itself
    }

    if (m2 > 0.0) {
        f.kurtosis = m4 / (m2 * m2);
    } else {
        f.degenerate = true;
    }

    double src_mean = 0.0;
    for (double v : source) src_mean += v;
    src_mean /= nd;
    double cross = 0.0, src_ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double cs = source[i] - src_mean;
        cross += (series[i] - f.mean) * cs;
        src_ss += cs * cs;
    }
    const double denom = std::sqrt(m2 * nd * src_ss);
    if (denom > 0.0) {
        f.corr_with_source = cross / denom;
    } else {
        f.degenerate = true;
    }
    return f;
}

std::vector<FeatureInstance> extract_instances(
    const Decomposition& decomposition, const Signal& source,
    const std::string& subject_id, Label label, FeatureSource feature_source) {
    std::vector<FeatureInstance> out;
    if (decomposition.imfs.size() < 2) return out;  // nothing usable
    out.reserve(decomposition.imfs.size() - 1);
    for (std::size_t k = 0; k + 1 < decomposition.imfs.size(); ++k) {
        const Imf& imf = decomposition.imfs[k];
        FeatureInstance inst;
        inst.subject_id = subject_id;
        inst.channel = source.channel;
        inst.imf_index = imf.index > 0 ? imf.index : static_cast<int>(k) + 1;
        inst.label = label;
        if (feature_source == FeatureSource::Envelope) {
            const auto attrs = instant_attributes(
                hilbert_transform(imf.values), source.sample_rate_hz);
            inst.vector = compute_features(attrs.amplitude, source.samples);
        } else {
            inst.vector = compute_features(imf.values, source.samples);
        }
        out.push_back(std::move(inst));
    }
    return out;
}

Normalizer fit_normalizer(const std::vector<FeatureInstance>& train) {
    if (train.empty()) {
        throw FeatureError("cannot fit a normalizer on an empty training set");
    }
    Normalizer n;
    n.min = train[0].vector.as_array();
    n.max = n.min;
    for (const FeatureInstance& inst : train) {
        const auto row = inst.vector.as_array();
        for (int j = 0; j < kFeatureCount; ++j) {
            n.min[j] = std::min(n.min[j], row[j]);
            n.max[j] = std::max(n.max[j], row[j]);
        }
    }
    return n;
}

std::array<double, kFeatureCount> apply_normalizer(const FeatureVector& v,
                                                   const Normalizer& n) {
    std::array<double, kFeatureCount> out{};
    const auto row = v.as_array();
    for (int j = 0; j < kFeatureCount; ++j) {
        const double span = n.max[j] - n.min[j];
        if (span > 0.0) {
            out[j] = std::clamp((row[j] - n.min[j]) / span, 0.0, 1.0);
        } else {
            out[j] = 0.5;  // constant training feature carries no signal
        }
    }
    return out;
}

namespace {

const char* kCsvHeader =
    "subject,channel,imf,label,mean,median,std,max,min,var,mode,corr,kurt,m3,"
    "c4,energy";

std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void save_features_csv(const std::vector<FeatureInstance>& instances,
                       const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw FeatureError("cannot open for writing: " + path.string());
    }
    out << kCsvHeader << '\n';
    for (const FeatureInstance& inst : instances) {
        const auto row = inst.vector.as_array();
        out << inst.subject_id << ',' << site_name(inst.channel) << ','
            << inst.imf_index << ',' << label_name(inst.label);
        for (double v : row) out << ',' << g17(v);
        out << '\n';
    }
    if (!out.flush()) {
        throw FeatureError("write failed: " + path.string());
    }
}

std::vector<FeatureInstance> load_features_csv(
    const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FeatureError("cannot open: " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != kCsvHeader) {
        throw FeatureError("unexpected feature CSV header in " +
                           path.string());
    }
    std::vector<FeatureInstance> out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != 4 + kFeatureCount) {
            throw FeatureError("bad field count at " + path.string() + ":" +
                               std::to_string(line_no));
        }
        FeatureInstance inst;
        inst.subject_id = cells[0];
        inst.channel = site_from_name(cells[1]);
        inst.imf_index = std::atoi(cells[2].c_str());
        inst.label = label_from_name(cells[3]);
        std::array<double, kFeatureCount> row{};
        for (int j = 0; j < kFeatureCount; ++j) {
            char* end = nullptr;
            row[j] = std::strtod(cells[4 + j].c_str(), &end);
            if (end == cells[4 + j].c_str()) {
                throw FeatureError("bad number at " + path.string() + ":" +
                                   std::to_string(line_no));
            }
        }
        FeatureVector& v = inst.vector;
        v.mean = row[0];
        v.median = row[1];
        v.std_dev = row[2];
        v.maximum = row[3];
        v.minimum = row[4];
        v.variance = row[5];
        v.mode_binned = row[6];
        v.corr_with_source = row[7];
        v.kurtosis = row[8];
        v.third_central_moment = row[9];
        v.fourth_cumulant = row[10];
        v.energy = row[11];
        out.push_back(std::move(inst));
    }
    return out;
}

}  // namespace respir
