#include "meltcast/model_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <sstream>

#include "meltcast/errors.hpp"
#include "meltcast/text.hpp"

namespace meltcast::model_io {

namespace {

constexpr char kBoosterMagic[8] = {'M', 'C', 'B', 'O', 'O', 'S', 'T', '\0'};
constexpr char kCalibratorMagic[8] = {'M', 'C', 'C', 'A', 'L', 'I', 'B', '\0'};

class Writer {
public:
    explicit Writer(std::ostream& out) : out_(out) {}

    void bytes(const void* p, std::size_t n) { out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }
    void u8(std::uint8_t v) { bytes(&v, 1); }
    void u32(std::uint32_t v) { le(v, 4); }
    void i32(std::int32_t v) { le(static_cast<std::uint32_t>(v), 4); }
    void u64(std::uint64_t v) { le(v, 8); }
    void f64(double v) { le(std::bit_cast<std::uint64_t>(v), 8); }
    void str(const std::string& s) {
        u32(static_cast<std::uint32_t>(s.size()));
        bytes(s.data(), s.size());
    }
    void f64s(const std::vector<double>& v) {
        u32(static_cast<std::uint32_t>(v.size()));
        for (double d : v) f64(d);
    }
    void strs(const std::vector<std::string>& v) {
        u32(static_cast<std::uint32_t>(v.size()));
        for (const auto& s : v) str(s);
    }

private:
    void le(std::uint64_t v, int n) {
        unsigned char buf[8];
        for (int i = 0; i < n; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
        bytes(buf, static_cast<std::size_t>(n));
    }
    std::ostream& out_;
};

class Reader {
public:
    explicit Reader(std::istream& in) : in_(in) {}

    void bytes(void* p, std::size_t n) {
        in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n) throw FormatError("model container is truncated");
    }
    std::uint8_t u8() {
        std::uint8_t v = 0;
        bytes(&v, 1);
        return v;
    }
    std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
    std::int32_t i32() { return static_cast<std::int32_t>(static_cast<std::uint32_t>(le(4))); }
    std::uint64_t u64() { return le(8); }
    double f64() { return std::bit_cast<double>(le(8)); }
    std::uint32_t count(std::uint32_t limit = 1u << 28) {
        const auto n = u32();
        if (n > limit) throw FormatError("model container holds an implausible element count");
        return n;
    }
    std::string str() {
        std::string s(count(1u << 20), '\0');
        bytes(s.data(), s.size());
        return s;
    }
    std::vector<double> f64s() {
        std::vector<double> v(count());
        for (auto& d : v) d = f64();
        return v;
    }
    std::vector<std::string> strs() {
        std::vector<std::string> v(count(1u << 16));
        for (auto& s : v) s = str();
        return v;
    }

private:
    std::uint64_t le(int n) {
        unsigned char buf[8];
        bytes(buf, static_cast<std::size_t>(n));
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
        return v;
    }
    std::istream& in_;
};

void read_header(Reader& r, const char (&magic)[8], unsigned version, const char* what) {
    char got[8];
    r.bytes(got, sizeof got);
    if (std::memcmp(got, magic, sizeof got) != 0) throw FormatError(std::string("not a ") + what + " container");
    const auto v = r.u32();
    if (v != version) {
        throw FormatError(std::string("unsupported ") + what + " format version " + std::to_string(v));
    }
}

// Regression tree node record, preorder:
//   i32 feature (-1 = leaf); leaf: f64 value; split: f64 threshold, f64 gain.
void write_tree(Writer& w, const gbm::RegressionTree& tree) {
    const auto& nodes = tree.nodes();
    w.u32(static_cast<std::uint32_t>(nodes.size()));
    std::function<void(int)> visit = [&](int k) {
        const auto& n = nodes[static_cast<std::size_t>(k)];
        w.i32(n.feature);
        if (n.is_leaf()) {
            w.f64(n.value);
        } else {
            w.f64(n.threshold);
            w.f64(n.gain);
            visit(n.left);
            visit(n.right);
        }
    };
    visit(0);
}

gbm::RegressionTree read_tree(Reader& r, std::size_t n_features) {
    const auto count = r.count();
    std::vector<gbm::TreeNode> nodes;
    nodes.reserve(count);
    std::function<int(int)> read_node = [&](int depth) -> int {
        if (nodes.size() >= count || depth > 64) throw FormatError("malformed tree record");
        const int id = static_cast<int>(nodes.size());
        nodes.emplace_back();
        const auto feature = r.i32();
        if (feature < 0) {
            nodes[static_cast<std::size_t>(id)].value = r.f64();
            return id;
        }
        if (static_cast<std::size_t>(feature) >= n_features) throw FormatError("tree split on unknown feature");
        const double threshold = r.f64();
        const double gain = r.f64();
        const int left = read_node(depth + 1);
        const int right = read_node(depth + 1);
        auto& n = nodes[static_cast<std::size_t>(id)];
        n.feature = feature;
        n.threshold = threshold;
        n.gain = gain;
        n.left = left;
        n.right = right;
        return id;
    };
    read_node(0);
    if (nodes.size() != count) throw FormatError("tree node count mismatch");
    return gbm::RegressionTree(std::move(nodes));
}

// Forest tree: u32 node count, per node i32 feature, f64 threshold,
// i32 left, i32 right, u32 begin, u32 end; then u32 count + u32 samples.
void write_forest(Writer& w, const qrf::QRFModel& m) {
    w.strs(m.covariate_names);
    w.f64s(m.training_scores);
    w.u32(static_cast<std::uint32_t>(m.trees.size()));
    for (const auto& t : m.trees) {
        w.u32(static_cast<std::uint32_t>(t.nodes.size()));
        for (const auto& n : t.nodes) {
            w.i32(n.feature);
            w.f64(n.threshold);
            w.i32(n.left);
            w.i32(n.right);
            w.u32(n.begin);
            w.u32(n.end);
        }
        w.u32(static_cast<std::uint32_t>(t.leaf_samples.size()));
        for (auto s : t.leaf_samples) w.u32(s);
    }
}

qrf::QRFModel read_forest(Reader& r) {
    qrf::QRFModel m;
    m.covariate_names = r.strs();
    m.training_scores = r.f64s();
    m.trees.resize(r.count());
    for (auto& t : m.trees) {
        t.nodes.resize(r.count());
        for (auto& n : t.nodes) {
            n.feature = r.i32();
            n.threshold = r.f64();
            n.left = r.i32();
            n.right = r.i32();
            n.begin = r.u32();
            n.end = r.u32();
        }
        t.leaf_samples.resize(r.count());
        for (auto& s : t.leaf_samples) {
            s = r.u32();
            if (s >= m.training_scores.size()) throw FormatError("forest leaf references an unknown score");
        }
        const auto n_nodes = static_cast<int>(t.nodes.size());
        for (std::size_t k = 0; k < t.nodes.size(); ++k) {
            const auto& n = t.nodes[k];
            if (n.is_leaf()) {
                if (n.begin > n.end || n.end > t.leaf_samples.size() || n.begin == n.end) {
                    throw FormatError("forest leaf range out of bounds");
                }
            } else if (n.left <= static_cast<int>(k) || n.right <= static_cast<int>(k) || n.left >= n_nodes ||
                       n.right >= n_nodes || static_cast<std::size_t>(n.feature) >= m.covariate_names.size()) {
                throw FormatError("forest node links out of bounds");
            }
        }
    }
    m.index_scores();
    return m;
}

template <class Fn>
void write_file(const std::string& path, Fn&& fn) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path + "'");
    fn(out);
    out.flush();
    if (!out) throw IoError("failed while writing '" + path + "'");
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    return in;
}

}  // namespace

void save_booster(const gbm::TrainedBooster& b, std::ostream& out) {
    Writer w(out);
    w.bytes(kBoosterMagic, sizeof kBoosterMagic);
    w.u32(kBoosterFormatVersion);
    w.strs(b.feature_names);
    w.u32(static_cast<std::uint32_t>(b.feature_stats.size()));
    for (const auto& s : b.feature_stats) {
        w.f64(s.mean);
        w.f64(s.min);
        w.f64(s.max);
    }
    w.f64(b.base_value);
    w.f64(b.shrinkage);
    w.f64(b.tau);
    w.i32(b.best_iter);
    w.i32(b.iterations_run);
    w.u8(b.early_stopping_warning ? 1 : 0);
    w.u32(static_cast<std::uint32_t>(b.loss_curve.size()));
    for (const auto& c : b.loss_curve) {
        w.i32(c.iteration);
        w.f64(c.calibration_loss);
        w.f64(c.training_loss);
    }
    w.u32(static_cast<std::uint32_t>(b.trees.size()));
    for (const auto& t : b.trees) write_tree(w, t);
}

gbm::TrainedBooster load_booster(std::istream& in) {
    Reader r(in);
    read_header(r, kBoosterMagic, kBoosterFormatVersion, "booster");
    gbm::TrainedBooster b;
    b.feature_names = r.strs();
    b.feature_stats.resize(r.count());
    if (b.feature_stats.size() != b.feature_names.size()) throw FormatError("feature summary count mismatch");
    for (auto& s : b.feature_stats) {
        s.mean = r.f64();
        s.min = r.f64();
        s.max = r.f64();
    }
    b.base_value = r.f64();
    b.shrinkage = r.f64();
    b.tau = r.f64();
    b.best_iter = r.i32();
    b.iterations_run = r.i32();
    b.early_stopping_warning = r.u8() != 0;
    b.loss_curve.resize(r.count());
    for (auto& c : b.loss_curve) {
        c.iteration = r.i32();
        c.calibration_loss = r.f64();
        c.training_loss = r.f64();
    }
    b.trees.reserve(r.u32());
    const auto n_trees = b.trees.capacity();
    for (std::size_t t = 0; t < n_trees; ++t) b.trees.push_back(read_tree(r, b.feature_names.size()));
    if (b.best_iter < 0 || static_cast<std::size_t>(b.best_iter) > b.trees.size()) {
        throw FormatError("booster best_iter exceeds its stored trees");
    }
    return b;
}

void save_booster_file(const gbm::TrainedBooster& b, const std::string& path) {
    write_file(path, [&](std::ostream& out) { save_booster(b, out); });
}

gbm::TrainedBooster load_booster_file(const std::string& path) {
    auto in = open_in(path);
    return load_booster(in);
}

std::string booster_identity(const gbm::TrainedBooster& b) {
    std::ostringstream out(std::ios::binary);
    save_booster(b, out);
    return text::hex64(text::fnv1a64(out.str()));
}

void save_calibrator(const conformal::ConformalCalibrator& c, std::ostream& out) {
    Writer w(out);
    w.bytes(kCalibratorMagic, sizeof kCalibratorMagic);
    w.u32(kCalibratorFormatVersion);
    w.str(c.booster_identity);
    w.strs(c.feature_names);
    w.f64(c.alpha);
    w.f64(c.ar1.intercept_c);
    w.f64(c.ar1.phi);
    w.u64(c.ar1.n_used);
    w.f64s(c.ar1.innovations);
    w.u32(static_cast<std::uint32_t>(c.ar1.innovation_index.size()));
    for (auto i : c.ar1.innovation_index) w.u64(i);
    w.f64s(c.whiteness.acf_values);
    w.f64(c.whiteness.ljung_box_stat);
    w.i32(c.whiteness.ljung_box_df);
    w.f64(c.whiteness.ljung_box_pvalue);
    w.f64(c.whiteness.level);
    w.u8(c.whiteness.passed ? 1 : 0);
    w.f64(c.score_offset);
    w.f64(c.score_scale);
    w.u8(c.pooled_fallback ? 1 : 0);
    for (const auto& rc : c.regimes) {
        w.u64(rc.score_count);
        w.f64(rc.marginal_halfwidth);
    }
    const std::size_t n_forests = c.pooled_fallback ? 1 : 2;
    for (std::size_t k = 0; k < n_forests; ++k) write_forest(w, c.forests[k]);
}

conformal::ConformalCalibrator load_calibrator(std::istream& in) {
    Reader r(in);
    read_header(r, kCalibratorMagic, kCalibratorFormatVersion, "calibrator");
    conformal::ConformalCalibrator c;
    c.booster_identity = r.str();
    c.feature_names = r.strs();
    c.alpha = r.f64();
    c.ar1.intercept_c = r.f64();
    c.ar1.phi = r.f64();
    c.ar1.n_used = r.u64();
    c.ar1.innovations = r.f64s();
    c.ar1.innovation_index.resize(r.count());
    for (auto& i : c.ar1.innovation_index) i = r.u64();
    c.whiteness.acf_values = r.f64s();
    c.whiteness.ljung_box_stat = r.f64();
    c.whiteness.ljung_box_df = r.i32();
    c.whiteness.ljung_box_pvalue = r.f64();
    c.whiteness.level = r.f64();
    c.whiteness.passed = r.u8() != 0;
    c.score_offset = r.f64();
    c.score_scale = r.f64();
    c.pooled_fallback = r.u8() != 0;
    for (auto& rc : c.regimes) {
        rc.score_count = r.u64();
        rc.marginal_halfwidth = r.f64();
    }
    const std::size_t n_forests = c.pooled_fallback ? 1 : 2;
    for (std::size_t k = 0; k < n_forests; ++k) c.forests[k] = read_forest(r);
    return c;
}

void save_calibrator_file(const conformal::ConformalCalibrator& c, const std::string& path) {
    write_file(path, [&](std::ostream& out) { save_calibrator(c, out); });
}

conformal::ConformalCalibrator load_calibrator_file(const std::string& path) {
    auto in = open_in(path);
    return load_calibrator(in);
}

}  // namespace meltcast::model_io
