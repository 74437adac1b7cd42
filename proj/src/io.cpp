#include "plad/io.hpp"

#include <fstream>

#include "plad/grid.hpp"

namespace plad {

namespace {

void require(const std::filesystem::path& p) {
    if (!std::filesystem::exists(p)) throw MissingInput("missing input: " + p.string());
}

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

PairSet zip(std::vector<Program> programs, std::vector<ShapeGrid> shapes, const std::filesystem::path& where) {
    if (programs.size() != shapes.size()) {
        throw IoError("program and shape counts differ in " + where.string());
    }
    PairSet out;
    out.reserve(programs.size());
    for (std::size_t i = 0; i < programs.size(); ++i) {
        out.push_back({std::move(shapes[i]), std::move(programs[i]), PairSource::SYNTH});
    }
    return out;
}

}  // namespace

Settings read_settings(const std::filesystem::path& path) {
    require(path);
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    Settings kv;
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
        ++n;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos || eq == 0) throw ParseError(n, "expected key=value in " + path.string());
        kv.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return kv;
}

void write_settings(const std::filesystem::path& path, const Settings& kv) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    for (const auto& [k, v] : kv) out << k << '=' << v << '\n';
    if (!out) throw IoError("write failed for " + path.string());
}

std::string setting(const Settings& kv, const std::string& key) {
    for (const auto& [k, v] : kv) {
        if (k == key) return v;
    }
    return {};
}

void write_programs(const std::filesystem::path& path, const Vocabulary& vocab, std::span<const Program> programs) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    for (const auto& p : programs) out << detokenize(vocab, p) << '\n';
    if (!out) throw IoError("write failed for " + path.string());
}

std::vector<Program> read_programs(const std::filesystem::path& path, const Grammar& grammar) {
    require(path);
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    std::vector<Program> out;
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
        ++n;
        line = trim(line);
        if (line.empty()) continue;
        try {
            out.push_back(parse(grammar, line));
        } catch (const Error& e) {
            throw ParseError(n, e.what());
        }
    }
    return out;
}

void write_dataset(const std::filesystem::path& dir, const Vocabulary& vocab, const Dataset& data,
                   const Settings& meta) {
    std::filesystem::create_directories(dir);
    vocab.save(dir / "vocab.txt");
    write_settings(dir / "meta.txt", meta);
    auto dump = [&](const PairSet& set, const std::string& prefix) {
        std::vector<Program> programs;
        std::vector<ShapeGrid> shapes;
        for (const auto& p : set) {
            programs.push_back(p.program);
            shapes.push_back(p.shape);
        }
        write_programs(dir / (prefix + "programs.txt"), vocab, programs);
        write_grids(dir / (prefix + "shapes.bin"), shapes);
    };
    dump(data.train, "");
    if (!data.val.empty()) dump(data.val, "val_");
}

StoredDataset read_dataset(const std::filesystem::path& dir) {
    require(dir);
    StoredDataset s;
    s.meta = read_settings(dir / "meta.txt");
    const std::string dsl = setting(s.meta, "dsl");
    if (dsl.empty()) throw IoError("meta.txt lacks dsl in " + dir.string());
    require(dir / "vocab.txt");
    s.vocab = std::make_shared<const Vocabulary>(Vocabulary::from_file(parse_dsl(dsl), dir / "vocab.txt"));
    const Grammar grammar(s.vocab);
    require(dir / "shapes.bin");
    s.data.train = zip(read_programs(dir / "programs.txt", grammar), read_grids(dir / "shapes.bin"), dir);
    if (std::filesystem::exists(dir / "val_shapes.bin")) {
        s.data.val = zip(read_programs(dir / "val_programs.txt", grammar), read_grids(dir / "val_shapes.bin"), dir);
    }
    return s;
}

std::vector<ShapeGrid> read_shape_set(const std::filesystem::path& path, bool val) {
    require(path);
    if (std::filesystem::is_directory(path)) {
        const auto file = path / (val ? "val_shapes.bin" : "shapes.bin");
        require(file);
        return read_grids(file);
    }
    return read_grids(path);
}

}  // namespace plad
