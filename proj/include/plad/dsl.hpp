#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace plad {

enum class DslId : std::uint8_t { Csg2d, Csg3d, ShapeAssembly };

std::string_view to_string(DslId dsl);
/// Accepts "csg2d", "csg3d", "shapeassembly" (or "sa").
DslId parse_dsl(std::string_view name);
/// 2 for Csg2d, 3 otherwise.
int grid_rank(DslId dsl);

enum class TokenKind : std::uint8_t {
    Stop,
    BoolOp,
    Shape2d,
    Prim3d,
    Param3d,
    SaBbox,
    SaCuboid,
    SaAttach,
    SaSqueeze,
    SaReflect,
    SaTranslate,
    SaSize,
    SaUv,
    SaFace,
    SaAxis,
    SaRef,
    SaCount,
};
inline constexpr int kTokenKindCount = 17;

enum class BoolOp : std::uint8_t { Intersect, Union, Subtract };
enum class Shape2dType : std::uint8_t { Circle, Square, Triangle };
enum class Prim3dType : std::uint8_t { Cuboid, Ellipsoid };
enum class Face : std::uint8_t { Right, Left, Top, Bot, Front, Back };
enum class Axis : std::uint8_t { X, Y, Z };

std::string_view to_string(BoolOp op);

/// Decoded meaning of one vocabulary entry. `value` carries the operator,
/// primitive type, bin, face, axis, cuboid reference or count depending on
/// `kind`; `x`, `y`, `r` are only used by 2D shape tokens.
struct TokenInfo {
    TokenKind kind = TokenKind::Stop;
    int value = 0;
    int x = 0;
    int y = 0;
    int r = 0;
};

/// Ordered token list for one DSL. Index = position in the list. The start
/// symbol used to prime decoding is not a token: it has index size().
class Vocabulary {
public:
    /// Builds a vocabulary from explicit token names; every name must be
    /// meaningful for `dsl` and unique, and STOP must be present.
    static Vocabulary from_names(DslId dsl, std::vector<std::string> names);
    /// One token name per line, index = line number.
    static Vocabulary from_file(DslId dsl, const std::filesystem::path& path);

    /// 3 types x L in {8..56 step 8}^2 x R in {8..32 step 4}: 1029 shape tokens.
    static Vocabulary csg2d_full();
    /// Reduced 2D vocabulary: 3 types x L in {16,32,48}^2 x R in {8,12,16}: 81 shape tokens.
    static Vocabulary csg2d_mini();
    /// Loads an explicit 400-shape-token list; throws if the count differs.
    static Vocabulary csg2d_csgnet400(const std::filesystem::path& path);
    static Vocabulary csg3d();
    static Vocabulary shape_assembly();
    /// Default vocabulary for each DSL (csg2d_full for Csg2d).
    static Vocabulary standard(DslId dsl);

    DslId dsl() const noexcept { return dsl_; }
    int size() const noexcept { return static_cast<int>(names_.size()); }
    int stop() const noexcept { return stop_; }
    int start() const noexcept { return size(); }

    const std::string& name(int token) const { return names_.at(static_cast<std::size_t>(token)); }
    const TokenInfo& info(int token) const { return infos_[static_cast<std::size_t>(token)]; }
    const std::vector<std::string>& names() const noexcept { return names_; }

    std::optional<int> find(std::string_view name) const;
    /// Throws UnknownToken.
    int index(std::string_view name) const;

    std::span<const int> tokens_of(TokenKind kind) const {
        return by_kind_[static_cast<std::size_t>(kind)];
    }
    /// Token with the given kind and value (e.g. Param3d bin 12); throws if absent.
    int token_for(TokenKind kind, int value) const;
    int shape_token_count() const { return static_cast<int>(tokens_of(TokenKind::Shape2d).size()); }

    void save(const std::filesystem::path& path) const;

    bool operator==(const Vocabulary& other) const { return dsl_ == other.dsl_ && names_ == other.names_; }

private:
    Vocabulary() = default;

    DslId dsl_ = DslId::Csg2d;
    std::vector<std::string> names_;
    std::vector<TokenInfo> infos_;
    std::unordered_map<std::string, int> lookup_;
    std::array<std::vector<int>, kTokenKindCount> by_kind_;
    int stop_ = -1;
};

/// A validated token sequence; always ends with STOP.
struct Program {
    DslId dsl = DslId::Csg2d;
    std::vector<int> tokens;

    std::size_t size() const noexcept { return tokens.size(); }
    friend bool operator==(const Program&, const Program&) = default;
    friend auto operator<=>(const Program&, const Program&) = default;
};

/// Derivation state of the postfix / block grammars. Small and copyable so
/// beam hypotheses can carry one each.
struct GrammarState {
    int length = 0;   // tokens consumed
    int depth = 0;    // CSG operand stack depth
    int pending = 0;  // argument tokens still owed by the current command
    int phase = 0;    // ShapeAssembly block phase
    int parts = 0;    // ShapeAssembly cuboids declared (bbox excluded)
    int attaches = 0; // attaches in the current ShapeAssembly block
    bool done = false;

    friend bool operator==(const GrammarState&, const GrammarState&) = default;
};

class Grammar {
public:
    enum class Verdict { Legal, Syntax, Semantic, Budget, Finished };

    Grammar(std::shared_ptr<const Vocabulary> vocab, int max_len);
    explicit Grammar(std::shared_ptr<const Vocabulary> vocab)
        : Grammar(vocab, default_max_len(vocab->dsl())) {}

    /// 40 for Csg2d, 100 for the 3D DSLs.
    static int default_max_len(DslId dsl);

    const Vocabulary& vocab() const noexcept { return *vocab_; }
    std::shared_ptr<const Vocabulary> vocab_ptr() const noexcept { return vocab_; }
    DslId dsl() const noexcept { return vocab_->dsl(); }
    int max_len() const noexcept { return max_len_; }

    GrammarState start() const { return {}; }
    Verdict check(const GrammarState& state, int token) const;
    /// Throws GrammarViolation / SemanticViolation when `token` is not legal.
    GrammarState advance(const GrammarState& state, int token) const;
    std::vector<int> legal_next(const GrammarState& state) const;
    /// mask[t] = 1 iff token t is legal; mask.size() must equal vocab().size().
    void legal_mask(const GrammarState& state, std::span<std::uint8_t> mask) const;
    /// Fewest tokens (STOP included) that complete a derivation from `state`.
    int min_completion(const GrammarState& state) const;

private:
    Verdict check_kind(const GrammarState& state, const TokenInfo& info) const;
    GrammarState step(const GrammarState& state, const TokenInfo& info) const;

    std::shared_ptr<const Vocabulary> vocab_;
    int max_len_;
};

/// Parses a line of whitespace separated token names terminated by STOP.
Program parse(const Grammar& grammar, std::string_view text);
/// Validates an existing token sequence (same checks as parse).
void validate(const Grammar& grammar, const Program& program);
std::string detokenize(const Vocabulary& vocab, const Program& program);

// --- structured views -------------------------------------------------------

struct CsgPrimitive {
    int type = 0;                    // Shape2dType or Prim3dType
    std::array<int, 6> params{};     // 2D: x, y, r; 3D: cx, cy, cz, ex, ey, ez
};

struct CsgNode {
    bool is_op = false;
    BoolOp op = BoolOp::Union;
    int prim = -1;
    int left = -1;
    int right = -1;
};

/// Postfix expression tree; nodes are stored in token order so children
/// precede parents and `root` is the last node.
struct CsgTree {
    std::vector<CsgPrimitive> prims;
    std::vector<CsgNode> nodes;
    int root = -1;
};

CsgTree csg_tree(const Vocabulary& vocab, const Program& program);
/// Inverse of csg_tree for the postfix encoding.
Program encode_csg(const Vocabulary& vocab, const CsgTree& tree);

struct SaAttach {
    int target = 0;
    Face face = Face::Bot;
    std::array<int, 4> uv{};  // u1 v1 u2 v2, bins 1..10
};

struct SaSqueeze {
    int first = 0;
    int second = 0;
    Face face = Face::Bot;
    std::array<int, 2> uv{};
};

struct SaSymmetry {
    enum class Kind : std::uint8_t { None, Reflect, Translate };
    Kind kind = Kind::None;
    Axis axis = Axis::X;
    int count = 1;     // translate copies, 1..4
    int distance = 1;  // translate offset bin, 1..32
};

struct SaBlock {
    std::array<int, 3> dims{};  // size bins 1..32
    std::vector<SaAttach> attaches;
    std::optional<SaSqueeze> squeeze;
    SaSymmetry symmetry;
};

struct SaProgram {
    int bbox_height = 32;
    std::vector<SaBlock> blocks;
};

SaProgram sa_structure(const Vocabulary& vocab, const Program& program);
Program encode_sa(const Vocabulary& vocab, const SaProgram& program);

}  // namespace plad
