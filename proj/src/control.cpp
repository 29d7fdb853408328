#include <famlies/control.hpp>

#include <json.hpp>

#include <functional>

namespace famlies::control {

using json = nlohmann::json;

std::string_view to_string(Op op) noexcept {
    switch (op) {
    case Op::Cholesky: return "cholesky";
    case Op::LU: return "lu";
    case Op::QR: return "qr";
    case Op::LTLT: return "ltlt";
    case Op::Gemm: return "gemm";
    }
    return "?";
}

std::optional<Op> parse_op(std::string_view s) noexcept {
    for (Op op : {Op::Cholesky, Op::LU, Op::QR, Op::LTLT, Op::Gemm})
        if (to_string(op) == s)
            return op;
    return std::nullopt;
}

engine::KernelConfig KernelOverrides::apply(engine::KernelConfig cfg) const {
    if (mr) cfg.mr = *mr;
    if (nr) cfg.nr = *nr;
    if (mc) cfg.mc = *mc;
    if (kc) cfg.kc = *kc;
    if (nc) cfg.nc = *nc;
    return cfg;
}

int ControlNode::depth() const noexcept {
    int d = 1;
    for (const ControlNode *p = child.get(); p; p = p->child.get())
        ++d;
    return d;
}

engine::KernelConfig ControlNode::kernel_config(const engine::KernelConfig &inherited) const {
    return kernel ? kernel->apply(inherited) : inherited;
}

bool operator==(const ControlNode &a, const ControlNode &b) {
    if (a.op != b.op || a.variant != b.variant || a.bs != b.bs || a.ways != b.ways ||
        a.kernel != b.kernel || bool(a.child) != bool(b.child))
        return false;
    return !a.child || *a.child == *b.child;
}

InvalidControlTree::InvalidControlTree(std::vector<Diagnostic> diagnostics)
    : Error([&] {
          std::string msg = "invalid control tree";
          for (auto &d : diagnostics)
              msg += "\n  " + (d.path.empty() ? std::string("<root>") : d.path) + ": " +
                     d.message;
          return msg;
      }()),
      diagnostics_(std::move(diagnostics)) {}

// ---------------------------------------------------------------------------
// Variant spelling
// ---------------------------------------------------------------------------

namespace {

json variant_to_json(Op op, Variant v) {
    if (op == Op::Cholesky)
        return v.blocked ? json(v.number) : json("unblocked" + std::to_string(v.number));
    return v.blocked ? "blocked" : "unblocked";
}

std::optional<Variant> variant_from_json(Op op, const json &j) {
    if (op == Op::Cholesky) {
        if (j.is_number_integer()) {
            auto n = j.get<long long>();
            if (n >= 1 && n <= 3)
                return Variant::blocked_v(int(n));
            return std::nullopt;
        }
        if (j.is_string()) {
            auto s = j.get<std::string>();
            for (int n = 1; n <= 3; ++n)
                if (s == "unblocked" + std::to_string(n))
                    return Variant::unblocked_v(n);
        }
        return std::nullopt;
    }
    if (!j.is_string())
        return std::nullopt;
    auto s = j.get<std::string>();
    if (s == "blocked")
        return Variant::blocked_v();
    if (s == "unblocked" && op != Op::Gemm)
        return Variant::unblocked_v();
    return std::nullopt;
}

std::string variant_hint(Op op) {
    switch (op) {
    case Op::Cholesky: return "integer 1..3 or \"unblocked1\"..\"unblocked3\"";
    case Op::Gemm: return "\"blocked\"";
    default: return "\"blocked\" or \"unblocked\"";
    }
}

bool is_positive_integer(const json &j) {
    return j.is_number_integer() && j.get<long long>() >= 1;
}

// ---------------------------------------------------------------------------
// JSON -> node (schema checks)
// ---------------------------------------------------------------------------

std::optional<ControlNode> node_from_json(const json &j, const std::string &prefix, int level,
                                          std::vector<Diagnostic> &diags) {
    auto bad = [&](const std::string &field, const std::string &why) {
        diags.push_back({prefix + field, why});
    };
    if (!j.is_object()) {
        diags.push_back({prefix.empty() ? "" : prefix.substr(0, prefix.size() - 1),
                         "control-tree node must be a JSON object"});
        return std::nullopt;
    }
    if (level > max_tree_depth) {
        bad("child", "tree depth exceeds " + std::to_string(max_tree_depth));
        return std::nullopt;
    }
    static const std::vector<std::string> known = {"op", "variant", "bs", "ways", "kernel",
                                                   "child"};
    for (auto &[key, value] : j.items())
        if (std::find(known.begin(), known.end(), key) == known.end())
            bad(key, "unknown field");

    ControlNode node;
    bool ok = true;
    if (!j.contains("op")) {
        bad("op", "required field missing");
        ok = false;
    } else if (!j["op"].is_string() || !parse_op(j["op"].get<std::string>())) {
        bad("op", "must be one of \"cholesky\", \"lu\", \"qr\", \"ltlt\", \"gemm\"");
        ok = false;
    } else {
        node.op = *parse_op(j["op"].get<std::string>());
    }

    if (!j.contains("variant")) {
        bad("variant", "required field missing");
        ok = false;
    } else if (ok) {
        auto v = variant_from_json(node.op, j["variant"]);
        if (!v) {
            bad("variant", "expected " + variant_hint(node.op) + " for op \"" +
                               std::string(to_string(node.op)) + "\"");
            ok = false;
        } else {
            node.variant = *v;
        }
    }

    if (j.contains("bs")) {
        if (!is_positive_integer(j["bs"])) {
            bad("bs", "must be an integer >= 1");
            ok = false;
        } else {
            node.bs = j["bs"].get<index_t>();
        }
    }
    if (j.contains("ways")) {
        if (!is_positive_integer(j["ways"]) || j["ways"].get<long long>() > 1024) {
            bad("ways", "must be an integer in [1, 1024]");
            ok = false;
        } else {
            node.ways = j["ways"].get<int>();
        }
    }
    if (j.contains("kernel")) {
        const json &k = j["kernel"];
        if (!k.is_object()) {
            bad("kernel", "must be an object with any of mr, nr, mc, kc, nc");
            ok = false;
        } else {
            KernelOverrides o;
            std::pair<const char *, std::optional<index_t> *> slots[] = {
                {"mr", &o.mr}, {"nr", &o.nr}, {"mc", &o.mc}, {"kc", &o.kc}, {"nc", &o.nc}};
            for (auto &[key, value] : k.items()) {
                auto it = std::find_if(std::begin(slots), std::end(slots),
                                       [&](auto &s) { return key == s.first; });
                if (it == std::end(slots)) {
                    bad("kernel." + key, "unknown field");
                    ok = false;
                } else if (!is_positive_integer(value)) {
                    bad("kernel." + key, "must be an integer >= 1");
                    ok = false;
                } else {
                    *it->second = value.get<index_t>();
                }
            }
            node.kernel = o;
        }
    }
    if (j.contains("child")) {
        auto child = node_from_json(j["child"], prefix + "child.", level + 1, diags);
        if (!child)
            ok = false;
        else
            node.child = std::make_shared<const ControlNode>(std::move(*child));
    }
    if (!ok)
        return std::nullopt;
    return node;
}

json node_to_json(const ControlNode &node) {
    json j;
    j["op"]      = std::string(to_string(node.op));
    j["variant"] = variant_to_json(node.op, node.variant);
    if (node.bs)
        j["bs"] = *node.bs;
    if (node.ways != 1)
        j["ways"] = node.ways;
    if (node.kernel) {
        json k = json::object();
        if (node.kernel->mr) k["mr"] = *node.kernel->mr;
        if (node.kernel->nr) k["nr"] = *node.kernel->nr;
        if (node.kernel->mc) k["mc"] = *node.kernel->mc;
        if (node.kernel->kc) k["kc"] = *node.kernel->kc;
        if (node.kernel->nc) k["nc"] = *node.kernel->nc;
        j["kernel"] = std::move(k);
    }
    if (node.child)
        j["child"] = node_to_json(*node.child);
    return j;
}

// ---------------------------------------------------------------------------
// Structural invariants
// ---------------------------------------------------------------------------

void check_structure(const ControlNode &node, const std::string &prefix,
                     const engine::KernelConfig &inherited, std::vector<Diagnostic> &diags) {
    auto bad = [&](const std::string &field, const std::string &why) {
        diags.push_back({prefix + field, why});
    };
    const bool is_gemm = node.op == Op::Gemm;
    if (!node.variant.blocked) {
        if (node.bs)
            bad("bs", "unblocked nodes take no block size");
        if (node.child)
            bad("child", "unblocked nodes are leaves and take no child");
    } else if (is_gemm) {
        if (node.bs)
            bad("bs", "gemm nodes are blocked through their kernel config, not bs");
        if (node.child)
            bad("child", "gemm nodes take no child");
    } else if (!node.bs) {
        bad("bs", "blocked nodes require a block size");
    } else if (*node.bs < 1) {
        bad("bs", "must be >= 1");
    }
    if (node.op == Op::Cholesky && (node.variant.number < 1 || node.variant.number > 3))
        bad("variant", "cholesky variants are numbered 1..3");
    if (node.op != Op::Cholesky && node.variant.number != 0)
        bad("variant", "only cholesky has numbered variants");
    if (node.ways < 1)
        bad("ways", "must be >= 1");

    engine::KernelConfig cfg = node.kernel_config(inherited);
    if (node.kernel) {
        try {
            cfg.validate();
        } catch (const ConfigError &e) {
            bad("kernel", e.what());
        }
    }
    if (node.child) {
        if (node.child->op != node.op)
            diags.push_back({prefix + "child.op",
                             "child op \"" + std::string(to_string(node.child->op)) +
                                 "\" cannot implement the sub-problem of \"" +
                                 std::string(to_string(node.op)) + "\""});
        else if (node.op == Op::LTLT && node.child->variant.blocked)
            diags.push_back({prefix + "child.variant",
                             "the ltlt panel is factored column by column; child must be "
                             "\"unblocked\""});
        check_structure(*node.child, prefix + "child.", cfg, diags);
    }
}

} // namespace

ControlNode parse_tree(std::string_view text) {
    json j;
    try {
        j = json::parse(text.begin(), text.end());
    } catch (const json::parse_error &e) {
        throw InvalidControlTree(
            {{"", "syntax error at byte " + std::to_string(e.byte) + ": " + e.what()}});
    }
    std::vector<Diagnostic> diags;
    auto node = node_from_json(j, "", 1, diags);
    if (node && diags.empty())
        diags = validate(*node);
    if (!diags.empty())
        throw InvalidControlTree(std::move(diags));
    return *node;
}

std::string serialize(const ControlNode &node) { return node_to_json(node).dump(); }

std::vector<Diagnostic> validate(const ControlNode &node) {
    std::vector<Diagnostic> diags;
    if (node.depth() > max_tree_depth) {
        diags.push_back({"", "tree depth " + std::to_string(node.depth()) + " exceeds " +
                                 std::to_string(max_tree_depth)});
        return diags;
    }
    check_structure(node, "", engine::KernelConfig::defaults(DType::F64), diags);
    return diags;
}

std::vector<Diagnostic> validate(const ControlNode &node, const Problem &problem) {
    std::vector<Diagnostic> diags = validate(node);
    if (node.op != problem.op)
        diags.push_back({"op", "tree is for \"" + std::string(to_string(node.op)) +
                                   "\" but the problem is \"" +
                                   std::string(to_string(problem.op)) + "\""});
    if (problem.m < 0 || problem.n < 0 || problem.k < 0)
        diags.push_back({"", "problem dimensions must be non-negative"});
    if (problem.op == Op::QR && problem.m < problem.n)
        diags.push_back({"", "qr requires m >= n"});
    return diags;
}

void require_valid(const ControlNode &node, const Problem &problem) {
    auto diags = validate(node, problem);
    if (!diags.empty())
        throw InvalidControlTree(std::move(diags));
}

// ---------------------------------------------------------------------------

std::vector<Variant> leaf_variants(Op op) {
    switch (op) {
    case Op::Cholesky:
        return {Variant::unblocked_v(1), Variant::unblocked_v(2), Variant::unblocked_v(3)};
    case Op::Gemm: return {};
    default: return {Variant::unblocked_v()};
    }
}

ControlNode default_tree(Op op, index_t n, DType) {
    constexpr index_t default_bs = 128;
    ControlNode leaf;
    leaf.op      = op;
    leaf.variant = op == Op::Cholesky ? Variant::unblocked_v(3) : Variant::unblocked_v();
    if (op == Op::Gemm) {
        leaf.variant = Variant::blocked_v();
        return leaf;
    }
    if (n <= default_bs)
        return leaf;
    ControlNode root;
    root.op      = op;
    root.variant = op == Op::Cholesky ? Variant::blocked_v(3) : Variant::blocked_v();
    root.bs      = default_bs;
    root.child   = std::make_shared<const ControlNode>(leaf);
    return root;
}

std::vector<ControlNode> enumerate_trees(Op op, const std::vector<Variant> &variants,
                                         const std::vector<index_t> &block_sizes, int depth) {
    if (variants.empty() || block_sizes.empty())
        throw ConfigError("enumerate_trees: variant and block-size sets must be non-empty");
    if (depth < 1 || depth > 3)
        throw ConfigError("enumerate_trees: depth must be 1, 2 or 3");
    for (index_t b : block_sizes)
        if (b < 1)
            throw ConfigError("enumerate_trees: block sizes must be >= 1");
    for (const Variant &v : variants) {
        bool ok = v.blocked && (op == Op::Cholesky ? v.number >= 1 && v.number <= 3
                                                   : v.number == 0);
        if (!ok)
            throw ConfigError("enumerate_trees: variant is not a blocked variant of " +
                              std::string(to_string(op)));
    }
    if ((op == Op::Gemm || op == Op::LTLT) && depth != 1)
        throw ConfigError("enumerate_trees: " + std::string(to_string(op)) +
                          " trees have a single blocked level");

    std::vector<ControlNode> out;
    if (op == Op::Gemm) {
        for (index_t kc : block_sizes) {
            ControlNode n;
            n.op         = Op::Gemm;
            n.variant    = Variant::blocked_v();
            n.kernel     = KernelOverrides{};
            n.kernel->kc = kc;
            out.push_back(std::move(n));
        }
        return out;
    }

    std::function<std::vector<ControlNode>(int)> level = [&](int d) {
        std::vector<ControlNode> trees;
        if (d == 0) {
            for (const Variant &v : leaf_variants(op)) {
                ControlNode leaf;
                leaf.op      = op;
                leaf.variant = v;
                trees.push_back(leaf);
            }
            return trees;
        }
        auto below = level(d - 1);
        for (const Variant &v : variants)
            for (index_t b : block_sizes)
                for (const ControlNode &sub : below) {
                    ControlNode n;
                    n.op      = op;
                    n.variant = v;
                    n.bs      = b;
                    n.child   = std::make_shared<const ControlNode>(sub);
                    trees.push_back(std::move(n));
                }
        return trees;
    };
    return level(depth);
}

std::string describe(const ControlNode &node) {
    std::string out;
    for (const ControlNode *p = &node; p; p = p->child.get()) {
        if (!out.empty())
            out += '/';
        if (p->op == Op::Cholesky)
            out += (p->variant.blocked ? "v" : "u") + std::to_string(p->variant.number);
        else
            out += p->variant.blocked ? "blocked" : "unblocked";
        if (p->bs)
            out += ".bs" + std::to_string(*p->bs);
        if (p->kernel) {
            const auto &k = *p->kernel;
            if (k.mr) out += ".mr" + std::to_string(*k.mr);
            if (k.nr) out += ".nr" + std::to_string(*k.nr);
            if (k.mc) out += ".mc" + std::to_string(*k.mc);
            if (k.kc) out += ".kc" + std::to_string(*k.kc);
            if (k.nc) out += ".nc" + std::to_string(*k.nc);
        }
        if (p->ways != 1)
            out += ".w" + std::to_string(p->ways);
    }
    return out;
}

} // namespace famlies::control
