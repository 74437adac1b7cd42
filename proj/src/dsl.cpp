#include "plad/dsl.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "plad/errors.hpp"

namespace plad {

namespace {

constexpr std::array<std::string_view, 3> kOpNames{"intersect", "union", "subtract"};
constexpr std::array<std::string_view, 3> kShape2dNames{"circle", "square", "triangle"};
constexpr std::array<std::string_view, 2> kPrim3dNames{"cuboid", "ellipsoid"};
constexpr std::array<std::string_view, 6> kFaceNames{"right", "left", "top", "bot", "front", "back"};
constexpr std::array<std::string_view, 3> kAxisNames{"X", "Y", "Z"};

constexpr int kSizeBins = 32;
constexpr int kUvBins = 10;
constexpr int kMaxParts = 10;
constexpr int kMaxCount = 4;

std::optional<int> parse_int(std::string_view s) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
        return std::nullopt;
    }
    return v;
}

template <std::size_t N>
std::optional<int> index_in(const std::array<std::string_view, N>& names, std::string_view s) {
    for (std::size_t i = 0; i < N; ++i) {
        if (names[i] == s) {
            return static_cast<int>(i);
        }
    }
    return std::nullopt;
}

// "<prefix><int>" with the int in [lo, hi].
std::optional<int> prefixed_int(std::string_view s, std::string_view prefix, int lo, int hi) {
    if (s.size() <= prefix.size() || s.substr(0, prefix.size()) != prefix) {
        return std::nullopt;
    }
    auto v = parse_int(s.substr(prefix.size()));
    if (!v || *v < lo || *v > hi) {
        return std::nullopt;
    }
    return v;
}

std::optional<TokenInfo> decode_csg2d(std::string_view name) {
    if (name == "STOP") {
        return TokenInfo{TokenKind::Stop};
    }
    if (auto op = index_in(kOpNames, name)) {
        return TokenInfo{TokenKind::BoolOp, *op};
    }
    const auto first = name.find('_');
    if (first == std::string_view::npos) {
        return std::nullopt;
    }
    auto type = index_in(kShape2dNames, name.substr(0, first));
    if (!type) {
        return std::nullopt;
    }
    std::array<int, 3> vals{};
    std::string_view rest = name.substr(first + 1);
    for (int i = 0; i < 3; ++i) {
        const auto sep = rest.find('_');
        const std::string_view part = (i < 2) ? rest.substr(0, sep) : rest;
        if ((i < 2 && sep == std::string_view::npos) || (i == 2 && rest.find('_') != std::string_view::npos)) {
            return std::nullopt;
        }
        auto v = parse_int(part);
        if (!v || *v < 0 || *v > 64) {
            return std::nullopt;
        }
        vals[static_cast<std::size_t>(i)] = *v;
        if (i < 2) {
            rest = rest.substr(sep + 1);
        }
    }
    if (vals[2] <= 0) {
        return std::nullopt;
    }
    TokenInfo info{TokenKind::Shape2d, *type};
    info.x = vals[0];
    info.y = vals[1];
    info.r = vals[2];
    return info;
}

std::optional<TokenInfo> decode_csg3d(std::string_view name) {
    if (name == "STOP") {
        return TokenInfo{TokenKind::Stop};
    }
    if (auto op = index_in(kOpNames, name)) {
        return TokenInfo{TokenKind::BoolOp, *op};
    }
    if (auto p = index_in(kPrim3dNames, name)) {
        return TokenInfo{TokenKind::Prim3d, *p};
    }
    if (auto v = parse_int(name); v && *v >= 1 && *v <= kSizeBins) {
        return TokenInfo{TokenKind::Param3d, *v};
    }
    return std::nullopt;
}

std::optional<TokenInfo> decode_sa(std::string_view name) {
    if (name == "STOP") return TokenInfo{TokenKind::Stop};
    if (name == "bbox") return TokenInfo{TokenKind::SaBbox};
    if (name == "Cuboid") return TokenInfo{TokenKind::SaCuboid};
    if (name == "attach") return TokenInfo{TokenKind::SaAttach};
    if (name == "squeeze") return TokenInfo{TokenKind::SaSqueeze};
    if (name == "reflect") return TokenInfo{TokenKind::SaReflect};
    if (name == "translate") return TokenInfo{TokenKind::SaTranslate};
    if (auto f = index_in(kFaceNames, name)) return TokenInfo{TokenKind::SaFace, *f};
    if (auto a = index_in(kAxisNames, name)) return TokenInfo{TokenKind::SaAxis, *a};
    if (auto v = prefixed_int(name, "uv", 1, kUvBins)) return TokenInfo{TokenKind::SaUv, *v};
    if (auto v = prefixed_int(name, "x", 1, kSizeBins)) return TokenInfo{TokenKind::SaSize, *v};
    if (auto v = prefixed_int(name, "c", 0, kMaxParts)) return TokenInfo{TokenKind::SaRef, *v};
    if (auto v = prefixed_int(name, "m", 1, kMaxCount)) return TokenInfo{TokenKind::SaCount, *v};
    return std::nullopt;
}

std::vector<std::string> csg2d_names(std::span<const int> positions, std::span<const int> radii) {
    std::vector<std::string> names;
    for (auto type : kShape2dNames) {
        for (int x : positions) {
            for (int y : positions) {
                for (int r : radii) {
                    names.push_back(std::string(type) + "_" + std::to_string(x) + "_" + std::to_string(y) +
                                    "_" + std::to_string(r));
                }
            }
        }
    }
    for (auto op : kOpNames) {
        names.emplace_back(op);
    }
    names.emplace_back("STOP");
    return names;
}

}  // namespace

std::string_view to_string(DslId dsl) {
    switch (dsl) {
        case DslId::Csg2d: return "csg2d";
        case DslId::Csg3d: return "csg3d";
        case DslId::ShapeAssembly: return "shapeassembly";
    }
    return "?";
}

DslId parse_dsl(std::string_view name) {
    if (name == "csg2d") return DslId::Csg2d;
    if (name == "csg3d") return DslId::Csg3d;
    if (name == "shapeassembly" || name == "sa") return DslId::ShapeAssembly;
    throw UsageError("unknown dsl '" + std::string(name) + "' (expected csg2d, csg3d or shapeassembly)");
}

int grid_rank(DslId dsl) { return dsl == DslId::Csg2d ? 2 : 3; }

std::string_view to_string(BoolOp op) { return kOpNames[static_cast<std::size_t>(op)]; }

// --- Vocabulary -------------------------------------------------------------

Vocabulary Vocabulary::from_names(DslId dsl, std::vector<std::string> names) {
    Vocabulary v;
    v.dsl_ = dsl;
    v.infos_.reserve(names.size());
    for (std::size_t i = 0; i < names.size(); ++i) {
        const auto& n = names[i];
        std::optional<TokenInfo> info;
        switch (dsl) {
            case DslId::Csg2d: info = decode_csg2d(n); break;
            case DslId::Csg3d: info = decode_csg3d(n); break;
            case DslId::ShapeAssembly: info = decode_sa(n); break;
        }
        if (!info) {
            throw UnknownToken(n);
        }
        if (!v.lookup_.emplace(n, static_cast<int>(i)).second) {
            throw Error("duplicate token name '" + n + "' in vocabulary");
        }
        v.infos_.push_back(*info);
        v.by_kind_[static_cast<std::size_t>(info->kind)].push_back(static_cast<int>(i));
        if (info->kind == TokenKind::Stop) {
            v.stop_ = static_cast<int>(i);
        }
    }
    v.names_ = std::move(names);
    if (v.stop_ < 0) {
        throw Error("vocabulary has no STOP token");
    }
    if (dsl != DslId::ShapeAssembly && v.tokens_of(TokenKind::BoolOp).size() != 3) {
        throw Error("CSG vocabulary must contain intersect, union and subtract");
    }
    return v;
}

Vocabulary Vocabulary::from_file(DslId dsl, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open vocabulary file " + path.string());
    }
    std::vector<std::string> names;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        names.push_back(line);
    }
    return from_names(dsl, std::move(names));
}

Vocabulary Vocabulary::csg2d_full() {
    constexpr std::array<int, 7> positions{8, 16, 24, 32, 40, 48, 56};
    constexpr std::array<int, 7> radii{8, 12, 16, 20, 24, 28, 32};
    auto v = from_names(DslId::Csg2d, csg2d_names(positions, radii));
    if (v.shape_token_count() != 1029) {
        throw Error("full 2D vocabulary must have 1029 shape tokens");
    }
    return v;
}

Vocabulary Vocabulary::csg2d_mini() {
    constexpr std::array<int, 3> positions{16, 32, 48};
    constexpr std::array<int, 3> radii{8, 12, 16};
    return from_names(DslId::Csg2d, csg2d_names(positions, radii));
}

Vocabulary Vocabulary::csg2d_csgnet400(const std::filesystem::path& path) {
    auto v = from_file(DslId::Csg2d, path);
    if (v.shape_token_count() != 400) {
        throw Error("csgnet400 vocabulary must list exactly 400 shape tokens, got " +
                    std::to_string(v.shape_token_count()));
    }
    return v;
}

Vocabulary Vocabulary::csg3d() {
    std::vector<std::string> names;
    for (auto p : kPrim3dNames) names.emplace_back(p);
    for (auto op : kOpNames) names.emplace_back(op);
    for (int i = 1; i <= kSizeBins; ++i) names.push_back(std::to_string(i));
    names.emplace_back("STOP");
    return from_names(DslId::Csg3d, std::move(names));
}

Vocabulary Vocabulary::shape_assembly() {
    std::vector<std::string> names{"bbox", "Cuboid", "attach", "squeeze", "reflect", "translate"};
    for (int i = 1; i <= kSizeBins; ++i) names.push_back("x" + std::to_string(i));
    for (int i = 1; i <= kUvBins; ++i) names.push_back("uv" + std::to_string(i));
    for (auto f : kFaceNames) names.emplace_back(f);
    for (auto a : kAxisNames) names.emplace_back(a);
    for (int i = 0; i <= kMaxParts; ++i) names.push_back("c" + std::to_string(i));
    for (int i = 1; i <= kMaxCount; ++i) names.push_back("m" + std::to_string(i));
    names.emplace_back("STOP");
    return from_names(DslId::ShapeAssembly, std::move(names));
}

Vocabulary Vocabulary::standard(DslId dsl) {
    switch (dsl) {
        case DslId::Csg2d: return csg2d_full();
        case DslId::Csg3d: return csg3d();
        case DslId::ShapeAssembly: return shape_assembly();
    }
    throw Error("unreachable");
}

std::optional<int> Vocabulary::find(std::string_view name) const {
    auto it = lookup_.find(std::string(name));
    if (it == lookup_.end()) {
        return std::nullopt;
    }
    return it->second;
}

int Vocabulary::index(std::string_view name) const {
    if (auto i = find(name)) {
        return *i;
    }
    throw UnknownToken(std::string(name));
}

int Vocabulary::token_for(TokenKind kind, int value) const {
    for (int t : tokens_of(kind)) {
        if (infos_[static_cast<std::size_t>(t)].value == value) {
            return t;
        }
    }
    throw Error("vocabulary has no token of the requested kind/value");
}

void Vocabulary::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write vocabulary file " + path.string());
    }
    for (const auto& n : names_) {
        out << n << '\n';
    }
}

// --- Grammar ----------------------------------------------------------------

namespace {

// ShapeAssembly derivation phases.
enum Phase : int {
    kExpectBbox = 0,
    kBboxHeight,
    kBlockStart,
    kCuboidDims,
    kExpectABlock,
    kAttachArgs,
    kAfterFirstAttach,
    kSqueezeArgs,
    kAfterABlock,
    kReflectArgs,
    kTranslateArgs,
    kAfterSBlock,
};

constexpr int kAttachArgCount = 6;   // ref face uv uv uv uv
constexpr int kSqueezeArgCount = 5;  // ref ref face uv uv
constexpr int kTranslateArgCount = 3;
constexpr int kMinBlock = 4 + 1 + kSqueezeArgCount;  // Cuboid x x x squeeze ...

TokenKind expected_arg(int phase, int pending) {
    switch (phase) {
        case kBboxHeight:
        case kCuboidDims: return TokenKind::SaSize;
        case kAttachArgs:
            if (pending == 6) return TokenKind::SaRef;
            if (pending == 5) return TokenKind::SaFace;
            return TokenKind::SaUv;
        case kSqueezeArgs:
            if (pending >= 4) return TokenKind::SaRef;
            if (pending == 3) return TokenKind::SaFace;
            return TokenKind::SaUv;
        case kReflectArgs: return TokenKind::SaAxis;
        case kTranslateArgs:
            if (pending == 3) return TokenKind::SaAxis;
            if (pending == 2) return TokenKind::SaCount;
            return TokenKind::SaSize;
        default: return TokenKind::Stop;
    }
}

bool is_arg_phase(int phase) {
    return phase == kBboxHeight || phase == kCuboidDims || phase == kAttachArgs || phase == kSqueezeArgs ||
           phase == kReflectArgs || phase == kTranslateArgs;
}

}  // namespace

Grammar::Grammar(std::shared_ptr<const Vocabulary> vocab, int max_len) : vocab_(std::move(vocab)), max_len_(max_len) {
    if (!vocab_) {
        throw Error("grammar requires a vocabulary");
    }
    if (max_len_ < min_completion(start())) {
        throw Error("max_len " + std::to_string(max_len_) + " is too short for any complete program");
    }
}

int Grammar::default_max_len(DslId dsl) { return dsl == DslId::Csg2d ? 40 : 100; }

int Grammar::min_completion(const GrammarState& s) const {
    if (s.done) {
        return 0;
    }
    switch (dsl()) {
        case DslId::Csg2d:
            return s.depth == 0 ? 2 : s.depth;
        case DslId::Csg3d:
            if (s.pending > 0) return s.pending + s.depth;
            return s.depth == 0 ? 8 : s.depth;
        case DslId::ShapeAssembly:
            switch (s.phase) {
                case kExpectBbox: return 2 + kMinBlock + 1;
                case kBboxHeight: return 1 + kMinBlock + 1;
                case kBlockStart: return s.parts >= 1 ? 1 : kMinBlock + 1;
                case kCuboidDims: return s.pending + 1 + kSqueezeArgCount + 1;
                case kExpectABlock: return 1 + kSqueezeArgCount + 1;
                case kAttachArgs:
                case kSqueezeArgs:
                case kReflectArgs:
                case kTranslateArgs: return s.pending + 1;
                default: return 1;
            }
    }
    return 0;
}

Grammar::Verdict Grammar::check_kind(const GrammarState& s, const TokenInfo& info) const {
    if (s.done) {
        return Verdict::Finished;
    }
    const TokenKind k = info.kind;
    switch (dsl()) {
        case DslId::Csg2d:
            if (k == TokenKind::Shape2d) return Verdict::Legal;
            if (k == TokenKind::BoolOp) return s.depth >= 2 ? Verdict::Legal : Verdict::Syntax;
            if (k == TokenKind::Stop) return s.depth == 1 ? Verdict::Legal : Verdict::Syntax;
            return Verdict::Syntax;
        case DslId::Csg3d:
            if (s.pending > 0) return k == TokenKind::Param3d ? Verdict::Legal : Verdict::Syntax;
            if (k == TokenKind::Prim3d) return Verdict::Legal;
            if (k == TokenKind::BoolOp) return s.depth >= 2 ? Verdict::Legal : Verdict::Syntax;
            if (k == TokenKind::Stop) return s.depth == 1 ? Verdict::Legal : Verdict::Syntax;
            return Verdict::Syntax;
        case DslId::ShapeAssembly: {
            if (is_arg_phase(s.phase)) {
                if (k != expected_arg(s.phase, s.pending)) return Verdict::Syntax;
                if (k == TokenKind::SaRef && info.value >= s.parts) {
                    return Verdict::Semantic;
                }
                return Verdict::Legal;
            }
            switch (s.phase) {
                case kExpectBbox: return k == TokenKind::SaBbox ? Verdict::Legal : Verdict::Syntax;
                case kExpectABlock:
                    return (k == TokenKind::SaAttach || k == TokenKind::SaSqueeze) ? Verdict::Legal : Verdict::Syntax;
                case kBlockStart:
                case kAfterFirstAttach:
                case kAfterABlock:
                case kAfterSBlock: {
                    if (k == TokenKind::SaCuboid) {
                        return s.parts < kMaxParts ? Verdict::Legal : Verdict::Semantic;
                    }
                    if (k == TokenKind::Stop) {
                        return s.parts >= 1 ? Verdict::Legal : Verdict::Syntax;
                    }
                    if (k == TokenKind::SaAttach) {
                        return s.phase == kAfterFirstAttach ? Verdict::Legal : Verdict::Syntax;
                    }
                    if (k == TokenKind::SaReflect || k == TokenKind::SaTranslate) {
                        return (s.phase == kAfterFirstAttach || s.phase == kAfterABlock) ? Verdict::Legal
                                                                                         : Verdict::Syntax;
                    }
                    return Verdict::Syntax;
                }
                default: return Verdict::Syntax;
            }
        }
    }
    return Verdict::Syntax;
}

GrammarState Grammar::step(const GrammarState& s, const TokenInfo& info) const {
    GrammarState n = s;
    n.length += 1;
    const TokenKind k = info.kind;
    if (k == TokenKind::Stop) {
        n.done = true;
        return n;
    }
    switch (dsl()) {
        case DslId::Csg2d:
            n.depth += (k == TokenKind::BoolOp) ? -1 : 1;
            return n;
        case DslId::Csg3d:
            if (k == TokenKind::Param3d) {
                n.pending -= 1;
            } else if (k == TokenKind::Prim3d) {
                n.depth += 1;
                n.pending = 6;
            } else {
                n.depth -= 1;
            }
            return n;
        case DslId::ShapeAssembly:
            if (is_arg_phase(s.phase)) {
                n.pending -= 1;
                if (n.pending > 0) {
                    return n;
                }
                switch (s.phase) {
                    case kBboxHeight: n.phase = kBlockStart; break;
                    case kCuboidDims: n.phase = kExpectABlock; break;
                    case kAttachArgs: n.phase = (s.attaches == 1) ? kAfterFirstAttach : kAfterABlock; break;
                    case kSqueezeArgs: n.phase = kAfterABlock; break;
                    default: n.phase = kAfterSBlock; break;
                }
                return n;
            }
            switch (k) {
                case TokenKind::SaBbox: n.phase = kBboxHeight; n.pending = 1; break;
                case TokenKind::SaCuboid:
                    n.phase = kCuboidDims;
                    n.pending = 3;
                    n.parts += 1;
                    n.attaches = 0;
                    break;
                case TokenKind::SaAttach:
                    n.phase = kAttachArgs;
                    n.pending = kAttachArgCount;
                    n.attaches += 1;
                    break;
                case TokenKind::SaSqueeze: n.phase = kSqueezeArgs; n.pending = kSqueezeArgCount; break;
                case TokenKind::SaReflect: n.phase = kReflectArgs; n.pending = 1; break;
                case TokenKind::SaTranslate: n.phase = kTranslateArgs; n.pending = kTranslateArgCount; break;
                default: break;
            }
            return n;
    }
    return n;
}

Grammar::Verdict Grammar::check(const GrammarState& state, int token) const {
    if (token < 0 || token >= vocab_->size()) {
        return Verdict::Syntax;
    }
    const TokenInfo& info = vocab_->info(token);
    const Verdict v = check_kind(state, info);
    if (v != Verdict::Legal) {
        return v;
    }
    const GrammarState next = step(state, info);
    if (next.length + min_completion(next) > max_len_) {
        return Verdict::Budget;
    }
    return Verdict::Legal;
}

GrammarState Grammar::advance(const GrammarState& state, int token) const {
    switch (check(state, token)) {
        case Verdict::Legal: return step(state, vocab_->info(token));
        case Verdict::Semantic:
            throw SemanticViolation(state.length, "'" + vocab_->name(token) + "' references an undeclared cuboid "
                                                  "or exceeds the part limit");
        case Verdict::Budget: {
            std::vector<std::string> expected;
            for (int t : legal_next(state)) expected.push_back(vocab_->name(t));
            throw GrammarViolation(state.length, std::move(expected),
                                   "program would exceed max length " + std::to_string(max_len_));
        }
        default: {
            std::vector<std::string> expected;
            for (int t : legal_next(state)) expected.push_back(vocab_->name(t));
            const std::string got = (token >= 0 && token < vocab_->size()) ? vocab_->name(token) : "<invalid>";
            throw GrammarViolation(state.length, std::move(expected), "unexpected '" + got + "'");
        }
    }
}

std::vector<int> Grammar::legal_next(const GrammarState& state) const {
    std::vector<int> out;
    for (int t = 0; t < vocab_->size(); ++t) {
        if (check(state, t) == Verdict::Legal) {
            out.push_back(t);
        }
    }
    return out;
}

void Grammar::legal_mask(const GrammarState& state, std::span<std::uint8_t> mask) const {
    // One verdict per kind, except SaRef which depends on the value.
    std::array<signed char, kTokenKindCount> kind_ok;
    kind_ok.fill(-1);
    for (int t = 0; t < vocab_->size(); ++t) {
        const TokenInfo& info = vocab_->info(t);
        const auto ki = static_cast<std::size_t>(info.kind);
        if (info.kind == TokenKind::SaRef) {
            mask[static_cast<std::size_t>(t)] = check(state, t) == Verdict::Legal;
            continue;
        }
        if (kind_ok[ki] < 0) {
            kind_ok[ki] = check(state, t) == Verdict::Legal ? 1 : 0;
        }
        mask[static_cast<std::size_t>(t)] = static_cast<std::uint8_t>(kind_ok[ki]);
    }
}

// --- parse / detokenize -----------------------------------------------------

Program parse(const Grammar& grammar, std::string_view text) {
    const Vocabulary& vocab = grammar.vocab();
    Program p{grammar.dsl(), {}};
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t j = i;
        while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
        if (j > i) {
            p.tokens.push_back(vocab.index(text.substr(i, j - i)));
        }
        i = j;
    }
    validate(grammar, p);
    return p;
}

void validate(const Grammar& grammar, const Program& program) {
    if (program.dsl != grammar.dsl()) {
        throw InvalidProgram("program DSL does not match grammar");
    }
    GrammarState s = grammar.start();
    for (int t : program.tokens) {
        s = grammar.advance(s, t);
    }
    if (!s.done) {
        std::vector<std::string> expected;
        for (int t : grammar.legal_next(s)) expected.push_back(grammar.vocab().name(t));
        throw GrammarViolation(s.length, std::move(expected), "program ended before STOP");
    }
}

std::string detokenize(const Vocabulary& vocab, const Program& program) {
    std::string out;
    for (std::size_t i = 0; i < program.tokens.size(); ++i) {
        if (i) out += ' ';
        out += vocab.name(program.tokens[i]);
    }
    return out;
}

// --- structured views -------------------------------------------------------

CsgTree csg_tree(const Vocabulary& vocab, const Program& program) {
    CsgTree tree;
    std::vector<int> stack;
    const auto& toks = program.tokens;
    for (std::size_t i = 0; i < toks.size(); ++i) {
        const TokenInfo& info = vocab.info(toks[i]);
        switch (info.kind) {
            case TokenKind::Shape2d: {
                CsgPrimitive prim{info.value, {info.x, info.y, info.r, 0, 0, 0}};
                tree.prims.push_back(prim);
                tree.nodes.push_back({false, BoolOp::Union, static_cast<int>(tree.prims.size()) - 1});
                stack.push_back(static_cast<int>(tree.nodes.size()) - 1);
                break;
            }
            case TokenKind::Prim3d: {
                if (i + 6 >= toks.size()) {
                    throw InvalidProgram("truncated 3D primitive");
                }
                CsgPrimitive prim{info.value, {}};
                for (int k = 0; k < 6; ++k) {
                    prim.params[static_cast<std::size_t>(k)] = vocab.info(toks[i + 1 + static_cast<std::size_t>(k)]).value;
                }
                i += 6;
                tree.prims.push_back(prim);
                tree.nodes.push_back({false, BoolOp::Union, static_cast<int>(tree.prims.size()) - 1});
                stack.push_back(static_cast<int>(tree.nodes.size()) - 1);
                break;
            }
            case TokenKind::BoolOp: {
                if (stack.size() < 2) {
                    throw InvalidProgram("operator without two operands");
                }
                const int right = stack.back();
                stack.pop_back();
                const int left = stack.back();
                stack.pop_back();
                tree.nodes.push_back({true, static_cast<BoolOp>(info.value), -1, left, right});
                stack.push_back(static_cast<int>(tree.nodes.size()) - 1);
                break;
            }
            case TokenKind::Stop: break;
            default: throw InvalidProgram("token '" + vocab.name(toks[i]) + "' is not a CSG token");
        }
    }
    if (stack.size() != 1) {
        throw InvalidProgram("CSG program does not reduce to a single expression");
    }
    tree.root = stack.back();
    return tree;
}

Program encode_csg(const Vocabulary& vocab, const CsgTree& tree) {
    Program p{vocab.dsl(), {}};
    auto emit = [&](auto&& self, int node) -> void {
        const CsgNode& n = tree.nodes[static_cast<std::size_t>(node)];
        if (n.is_op) {
            self(self, n.left);
            self(self, n.right);
            p.tokens.push_back(vocab.token_for(TokenKind::BoolOp, static_cast<int>(n.op)));
            return;
        }
        const CsgPrimitive& prim = tree.prims[static_cast<std::size_t>(n.prim)];
        if (vocab.dsl() == DslId::Csg2d) {
            const std::string name = std::string(kShape2dNames[static_cast<std::size_t>(prim.type)]) + "_" +
                                     std::to_string(prim.params[0]) + "_" + std::to_string(prim.params[1]) + "_" +
                                     std::to_string(prim.params[2]);
            p.tokens.push_back(vocab.index(name));
        } else {
            p.tokens.push_back(vocab.token_for(TokenKind::Prim3d, prim.type));
            for (int v : prim.params) {
                p.tokens.push_back(vocab.token_for(TokenKind::Param3d, v));
            }
        }
    };
    emit(emit, tree.root);
    p.tokens.push_back(vocab.stop());
    return p;
}

SaProgram sa_structure(const Vocabulary& vocab, const Program& program) {
    SaProgram out;
    const auto& toks = program.tokens;
    std::size_t i = 0;
    auto next = [&](TokenKind kind) -> int {
        if (i >= toks.size() || vocab.info(toks[i]).kind != kind) {
            throw InvalidProgram("malformed ShapeAssembly program at token " + std::to_string(i));
        }
        return vocab.info(toks[i++]).value;
    };
    auto peek = [&]() { return i < toks.size() ? vocab.info(toks[i]).kind : TokenKind::Stop; };

    next(TokenKind::SaBbox);
    out.bbox_height = next(TokenKind::SaSize);
    while (peek() == TokenKind::SaCuboid) {
        ++i;
        SaBlock block;
        for (auto& d : block.dims) d = next(TokenKind::SaSize);
        while (peek() == TokenKind::SaAttach) {
            ++i;
            SaAttach a;
            a.target = next(TokenKind::SaRef);
            a.face = static_cast<Face>(next(TokenKind::SaFace));
            for (auto& uv : a.uv) uv = next(TokenKind::SaUv);
            block.attaches.push_back(a);
        }
        if (block.attaches.empty()) {
            if (peek() != TokenKind::SaSqueeze) {
                throw InvalidProgram("ShapeAssembly block without attach or squeeze");
            }
            ++i;
            SaSqueeze s;
            s.first = next(TokenKind::SaRef);
            s.second = next(TokenKind::SaRef);
            s.face = static_cast<Face>(next(TokenKind::SaFace));
            for (auto& uv : s.uv) uv = next(TokenKind::SaUv);
            block.squeeze = s;
        }
        if (peek() == TokenKind::SaReflect) {
            ++i;
            block.symmetry.kind = SaSymmetry::Kind::Reflect;
            block.symmetry.axis = static_cast<Axis>(next(TokenKind::SaAxis));
        } else if (peek() == TokenKind::SaTranslate) {
            ++i;
            block.symmetry.kind = SaSymmetry::Kind::Translate;
            block.symmetry.axis = static_cast<Axis>(next(TokenKind::SaAxis));
            block.symmetry.count = next(TokenKind::SaCount);
            block.symmetry.distance = next(TokenKind::SaSize);
        }
        out.blocks.push_back(std::move(block));
    }
    next(TokenKind::Stop);
    return out;
}

Program encode_sa(const Vocabulary& vocab, const SaProgram& program) {
    Program p{DslId::ShapeAssembly, {}};
    auto put = [&](TokenKind kind, int value = 0) {
        const auto& ts = vocab.tokens_of(kind);
        if (kind == TokenKind::SaBbox || kind == TokenKind::SaCuboid || kind == TokenKind::SaAttach ||
            kind == TokenKind::SaSqueeze || kind == TokenKind::SaReflect || kind == TokenKind::SaTranslate) {
            p.tokens.push_back(ts.front());
        } else {
            p.tokens.push_back(vocab.token_for(kind, value));
        }
    };
    put(TokenKind::SaBbox);
    put(TokenKind::SaSize, program.bbox_height);
    for (const auto& b : program.blocks) {
        put(TokenKind::SaCuboid);
        for (int d : b.dims) put(TokenKind::SaSize, d);
        if (b.squeeze) {
            put(TokenKind::SaSqueeze);
            put(TokenKind::SaRef, b.squeeze->first);
            put(TokenKind::SaRef, b.squeeze->second);
            put(TokenKind::SaFace, static_cast<int>(b.squeeze->face));
            for (int uv : b.squeeze->uv) put(TokenKind::SaUv, uv);
        } else {
            for (const auto& a : b.attaches) {
                put(TokenKind::SaAttach);
                put(TokenKind::SaRef, a.target);
                put(TokenKind::SaFace, static_cast<int>(a.face));
                for (int uv : a.uv) put(TokenKind::SaUv, uv);
            }
        }
        switch (b.symmetry.kind) {
            case SaSymmetry::Kind::Reflect:
                put(TokenKind::SaReflect);
                put(TokenKind::SaAxis, static_cast<int>(b.symmetry.axis));
                break;
            case SaSymmetry::Kind::Translate:
                put(TokenKind::SaTranslate);
                put(TokenKind::SaAxis, static_cast<int>(b.symmetry.axis));
                put(TokenKind::SaCount, b.symmetry.count);
                put(TokenKind::SaSize, b.symmetry.distance);
                break;
            case SaSymmetry::Kind::None: break;
        }
    }
    p.tokens.push_back(vocab.stop());
    return p;
}

}  // namespace plad
