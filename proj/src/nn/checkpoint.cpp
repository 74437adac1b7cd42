#include "plad/nn/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <sstream>

#include "plad/errors.hpp"

namespace plad::nn {

namespace {

constexpr std::string_view kMagic = "PLADCKPT";
constexpr char kVersion = '1';

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class Reader {
public:
    explicit Reader(std::string_view data) : data_(data) {}
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
        pos_ += 8;
        return v;
    }
    std::string bytes(std::uint64_t n) {
        need(n);
        std::string s(data_.substr(pos_, n));
        pos_ += n;
        return s;
    }
    bool done() const { return pos_ == data_.size(); }
    std::size_t remaining() const { return data_.size() - pos_; }

private:
    void need(std::uint64_t n) const {
        if (n > data_.size() - pos_) throw CorruptCheckpoint("checkpoint truncated");
    }
    std::string_view data_;
    std::size_t pos_ = 0;
};

std::string join_names(const Vocabulary& v) {
    std::string s;
    for (const auto& n : v.names()) {
        if (!s.empty()) s += ' ';
        s += n;
    }
    return s;
}

Checkpoint model_checkpoint(std::string kind, const ModelConfig& cfg, const Vocabulary& vocab, const ParamSet& ps,
                            const KeyValues& extra) {
    Checkpoint c;
    c.meta.emplace_back("kind", std::move(kind));
    for (auto& kv : cfg.to_pairs()) c.meta.push_back(std::move(kv));
    c.meta.emplace_back("vocab", join_names(vocab));
    for (const auto& kv : extra) c.meta.push_back(kv);
    for (const auto& p : ps) c.blocks.emplace_back(p.name, p.value);
    return c;
}

struct Loaded {
    ModelConfig cfg;
    std::shared_ptr<const Vocabulary> vocab;
    Checkpoint ckpt;
};

Loaded load_common(const std::filesystem::path& path, std::string_view kind) {
    Loaded l;
    l.ckpt = read_checkpoint(path);
    if (l.ckpt.get("kind") != kind) throw CorruptCheckpoint("checkpoint holds a different model kind");
    KeyValues model_keys;
    static const std::vector<std::string> keys{"dsl", "width", "layers", "heads", "ffn",
                                               "context", "max_len", "dropout", "convs", "latent"};
    for (const auto& kv : l.ckpt.meta) {
        if (std::find(keys.begin(), keys.end(), kv.first) != keys.end()) model_keys.push_back(kv);
    }
    try {
        l.cfg = ModelConfig::from_pairs(model_keys);
        std::vector<std::string> names;
        std::istringstream ss(l.ckpt.get("vocab"));
        for (std::string n; ss >> n;) names.push_back(n);
        l.vocab = std::make_shared<const Vocabulary>(Vocabulary::from_names(l.cfg.dsl, std::move(names)));
    } catch (const CorruptCheckpoint&) {
        throw;
    } catch (const Error& e) {
        throw CorruptCheckpoint(std::string("bad checkpoint metadata: ") + e.what());
    }
    return l;
}

void fill(ParamSet& ps, const Checkpoint& c) {
    if (c.blocks.size() != ps.blocks()) throw CorruptCheckpoint("parameter block count mismatch");
    std::size_t i = 0;
    for (auto& p : ps) {
        const auto& [name, values] = c.blocks[i++];
        if (name != p.name || values.size() != p.size()) throw CorruptCheckpoint("parameter block mismatch: " + name);
        p.value = values;
    }
}

}  // namespace

std::string Checkpoint::get(const std::string& key) const {
    for (const auto& [k, v] : meta) {
        if (k == key) return v;
    }
    return {};
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    std::string out(kMagic);
    out += kVersion;
    out += '\n';
    for (const auto& [k, v] : ckpt.meta) {
        if (k.empty() || k.find_first_of("=\n") != std::string::npos || v.find('\n') != std::string::npos) {
            throw UsageError("checkpoint metadata must be single-line key=value: " + k);
        }
        out += k + "=" + v + "\n";
    }
    out += '\n';
    put_u64(out, ckpt.blocks.size());
    for (const auto& [name, values] : ckpt.blocks) {
        put_u64(out, name.size());
        out += name;
        put_u64(out, values.size());
        for (double d : values) put_u64(out, std::bit_cast<std::uint64_t>(d));
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write " + path.string());
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw IoError("write failed for " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot read " + path.string());
    const std::string data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (data.size() < kMagic.size() + 2 || data.compare(0, kMagic.size(), kMagic) != 0) {
        throw CorruptCheckpoint("not a checkpoint: " + path.string());
    }
    const char version = data[kMagic.size()];
    if (std::isdigit(static_cast<unsigned char>(version)) && version != kVersion && data[kMagic.size() + 1] == '\n') {
        throw VersionMismatch(std::string("checkpoint version ") + version + ", expected " + kVersion);
    }
    if (version != kVersion || data[kMagic.size() + 1] != '\n') throw CorruptCheckpoint("bad checkpoint header");
    Checkpoint c;
    std::size_t pos = kMagic.size() + 2;
    while (true) {
        const std::size_t eol = data.find('\n', pos);
        if (eol == std::string::npos) throw CorruptCheckpoint("checkpoint truncated in metadata");
        const std::string_view line(data.data() + pos, eol - pos);
        pos = eol + 1;
        if (line.empty()) break;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos || eq == 0) throw CorruptCheckpoint("bad metadata line");
        c.meta.emplace_back(std::string(line.substr(0, eq)), std::string(line.substr(eq + 1)));
    }
    Reader r(std::string_view(data).substr(pos));
    const std::uint64_t count = r.u64();
    if (count > r.remaining() / 16) throw CorruptCheckpoint("implausible block count");
    for (std::uint64_t b = 0; b < count; ++b) {
        std::string name = r.bytes(r.u64());
        const std::uint64_t n = r.u64();
        if (n > r.remaining() / 8) throw CorruptCheckpoint("checkpoint truncated");
        std::vector<double> values(n);
        for (auto& v : values) v = std::bit_cast<double>(r.u64());
        c.blocks.emplace_back(std::move(name), std::move(values));
    }
    if (!r.done()) throw CorruptCheckpoint("trailing bytes after the last block");
    return c;
}

void save_model(const RecognitionModel& m, const std::filesystem::path& path, const KeyValues& extra) {
    write_checkpoint(path, model_checkpoint("recognition", m.config(), m.vocab(), m.params(), extra));
}

RecognitionModel load_model(const std::filesystem::path& path) {
    Loaded l = load_common(path, "recognition");
    RecognitionModel m(l.vocab, l.cfg);
    fill(m.params(), l.ckpt);
    return m;
}

void save_model(const GenerativeModel& g, const std::filesystem::path& path, const KeyValues& extra) {
    write_checkpoint(path, model_checkpoint("generative", g.config(), g.vocab(), g.params(), extra));
}

GenerativeModel load_generative(const std::filesystem::path& path) {
    Loaded l = load_common(path, "generative");
    GenerativeModel g(l.vocab, l.cfg);
    fill(g.params(), l.ckpt);
    return g;
}

}  // namespace plad::nn
