#include "gmner/checkpoint.hpp"

#include <cstdio>
#include <fstream>

namespace gmner::checkpoint {

namespace {

constexpr char kMagic[8] = {'G', 'M', 'N', 'R', 'C', 'K', 'P', '1'};

void write_u64(std::ostream& out, uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void write_i64(std::ostream& out, int64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void write_i32(std::ostream& out, int32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void write_f64(std::ostream& out, double v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void write_string(std::ostream& out, const std::string& s) {
    write_u64(out, s.size());
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}
void write_mat(std::ostream& out, const Mat& m) {
    write_i32(out, m.rows);
    write_i32(out, m.cols);
    out.write(reinterpret_cast<const char*>(m.a.data()),
              static_cast<std::streamsize>(m.a.size() * sizeof(double)));
}

uint64_t read_u64(std::istream& in) {
    uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}
int64_t read_i64(std::istream& in) {
    int64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}
int32_t read_i32(std::istream& in) {
    int32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}
double read_f64(std::istream& in) {
    double v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}
std::string read_string(std::istream& in) {
    const uint64_t len = read_u64(in);
    std::string s(len, '\0');
    in.read(s.data(), static_cast<std::streamsize>(len));
    return s;
}
Mat read_mat(std::istream& in) {
    const int32_t rows = read_i32(in);
    const int32_t cols = read_i32(in);
    if (rows < 0 || cols < 0) throw ParseError("checkpoint: negative tensor shape");
    Mat m(rows, cols);
    in.read(reinterpret_cast<char*>(m.a.data()),
            static_cast<std::streamsize>(m.a.size() * sizeof(double)));
    return m;
}

} // namespace

void save(const std::string& path, const Model& model, const optim::Adam* adam, int epoch,
          const Rng* rng, double best_f1) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw Error("checkpoint: cannot open " + tmp + " for writing");
        out.write(kMagic, sizeof(kMagic));
        write_string(out, model.config().to_json_text());
        write_i32(out, model.feature_dim());
        const auto& words = model.vocab().words();
        write_u64(out, words.size());
        for (const std::string& w : words) write_string(out, w);
        const auto& params = model.params().all();
        write_u64(out, params.size());
        for (const auto& p : params) {
            write_string(out, p->name);
            write_mat(out, p->value);
        }
        out.put(adam != nullptr ? 1 : 0);
        if (adam != nullptr) {
            write_i64(out, adam->steps());
            write_u64(out, adam->slots().size());
            for (const auto& s : adam->slots()) {
                write_mat(out, s.m);
                write_mat(out, s.v);
            }
        }
        write_i32(out, epoch);
        write_u64(out, rng != nullptr ? rng->state0() : 0);
        write_u64(out, rng != nullptr ? rng->state1() : 0);
        write_f64(out, best_f1);
        if (!out) throw Error("checkpoint: write failed for " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw Error("checkpoint: cannot rename " + tmp + " to " + path);
}

CheckpointData load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("checkpoint: cannot open " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::string(magic, 8) != std::string(kMagic, 8))
        throw ParseError("checkpoint: bad magic in " + path);

    CheckpointData d;
    d.config = RunConfig::from_json_text(read_string(in));
    d.feature_dim = read_i32(in);
    const uint64_t words = read_u64(in);
    for (uint64_t i = 0; i < words; ++i) d.vocab_words.push_back(read_string(in));
    const uint64_t tensors = read_u64(in);
    for (uint64_t i = 0; i < tensors; ++i) {
        std::string name = read_string(in);
        d.tensors.emplace_back(std::move(name), read_mat(in));
    }
    d.has_optimizer = in.get() == 1;
    if (d.has_optimizer) {
        d.adam_step = read_i64(in);
        const uint64_t slots = read_u64(in);
        for (uint64_t i = 0; i < slots; ++i) {
            optim::Adam::Slot s;
            s.m = read_mat(in);
            s.v = read_mat(in);
            d.adam_slots.push_back(std::move(s));
        }
    }
    d.epoch = read_i32(in);
    d.rng_s0 = read_u64(in);
    d.rng_s1 = read_u64(in);
    d.best_f1 = read_f64(in);
    if (!in) throw ParseError("checkpoint: truncated file " + path);
    return d;
}

std::unique_ptr<Model> restore_model(const CheckpointData& data) {
    Vocab vocab;
    for (const std::string& w : data.vocab_words) vocab.add(w);
    auto model = std::make_unique<Model>(data.config, std::move(vocab), data.feature_dim);

    const auto& params = model->params().all();
    if (params.size() != data.tensors.size())
        throw Error("checkpoint: parameter count mismatch between file and config");
    for (size_t i = 0; i < params.size(); ++i) {
        const auto& [name, value] = data.tensors[i];
        if (params[i]->name != name)
            throw Error("checkpoint: tensor name mismatch at index " + std::to_string(i) + ": " +
                        params[i]->name + " vs " + name);
        if (!params[i]->value.same_shape(value))
            throw Error("checkpoint: tensor shape mismatch for " + name);
        params[i]->value = value;
    }
    return model;
}

} // namespace gmner::checkpoint
