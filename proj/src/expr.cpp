#include "omlab/expr.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numbers>
#include <vector>

#include "omlab/error.hpp"

namespace omlab {

enum class NodeKind { Number, Coord, Time, PathValue, Terminal, Unary, Binary, Call, Integral };

struct ExprNode {
    NodeKind kind = NodeKind::Number;
    double value = 0.0;
    int index = 0;  // coordinate index (0-based)
    char op = 0;
    std::string fn;
    std::vector<std::shared_ptr<const ExprNode>> args;
};

namespace {

using NodePtr = std::shared_ptr<const ExprNode>;

NodePtr make_number(double v) {
    auto n = std::make_shared<ExprNode>();
    n->kind = NodeKind::Number;
    n->value = v;
    return n;
}

class Parser {
public:
    explicit Parser(const std::string& s) : src_(s) {}

    NodePtr parse() {
        auto n = expr();
        skip();
        if (pos_ != src_.size()) fail("unexpected trailing input");
        return n;
    }

private:
    [[noreturn]] void fail(const std::string& msg) const {
        throw InputError("expression '" + src_ + "': " + msg + " at position " + std::to_string(pos_));
    }

    void skip() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!accept(c)) fail(std::string("expected '") + c + "'");
    }

    NodePtr binary(char op, NodePtr a, NodePtr b) {
        auto n = std::make_shared<ExprNode>();
        n->kind = NodeKind::Binary;
        n->op = op;
        n->args = {std::move(a), std::move(b)};
        return n;
    }

    NodePtr expr() {
        auto lhs = term();
        for (;;) {
            if (accept('+')) lhs = binary('+', lhs, term());
            else if (accept('-')) lhs = binary('-', lhs, term());
            else return lhs;
        }
    }

    NodePtr term() {
        auto lhs = unary();
        for (;;) {
            if (accept('*')) lhs = binary('*', lhs, unary());
            else if (accept('/')) lhs = binary('/', lhs, unary());
            else return lhs;
        }
    }

    NodePtr unary() {
        if (accept('-')) {
            auto n = std::make_shared<ExprNode>();
            n->kind = NodeKind::Unary;
            n->op = '-';
            n->args = {unary()};
            return n;
        }
        if (accept('+')) return unary();
        return power();
    }

    NodePtr power() {
        auto base = primary();
        if (accept('^')) return binary('^', base, unary());
        return base;
    }

    NodePtr primary() {
        skip();
        if (pos_ >= src_.size()) fail("unexpected end of input");
        const char c = src_[pos_];
        if (c == '(') {
            ++pos_;
            auto n = expr();
            expect(')');
            return n;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return name();
        fail(std::string("unexpected character '") + c + "'");
    }

    NodePtr number() {
        const char* begin = src_.c_str() + pos_;
        char* end = nullptr;
        const double v = std::strtod(begin, &end);
        if (end == begin) fail("malformed number");
        pos_ += static_cast<std::size_t>(end - begin);
        return make_number(v);
    }

    NodePtr name() {
        const std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
            ++pos_;
        const std::string id = src_.substr(start, pos_ - start);
        skip();
        if (pos_ < src_.size() && src_[pos_] == '(') {
            ++pos_;
            return call(id);
        }
        auto n = std::make_shared<ExprNode>();
        if (id == "pi") return make_number(std::numbers::pi);
        if (id == "t") {
            n->kind = NodeKind::Time;
        } else if (id == "w") {
            n->kind = NodeKind::PathValue;
        } else if (id == "wT") {
            n->kind = NodeKind::Terminal;
        } else if (id.size() >= 2 && id[0] == 'x' &&
                   std::all_of(id.begin() + 1, id.end(),
                               [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); })) {
            const int k = std::stoi(id.substr(1));
            if (k < 1) fail("coordinate indices start at x1");
            n->kind = NodeKind::Coord;
            n->index = k - 1;
        } else {
            pos_ = start;
            fail("unknown identifier '" + id + "'");
        }
        return n;
    }

    NodePtr call(const std::string& fn) {
        static const std::vector<std::string> unary_fns = {"sin", "cos", "tan", "exp", "log",
                                                           "sqrt", "tanh", "abs"};
        static const std::vector<std::string> binary_fns = {"min", "max"};
        std::vector<NodePtr> args{expr()};
        while (accept(',')) args.push_back(expr());
        expect(')');

        auto n = std::make_shared<ExprNode>();
        n->fn = fn;
        n->args = std::move(args);
        if (fn == "integral") {
            if (n->args.size() != 1) fail("integral takes one argument");
            n->kind = NodeKind::Integral;
        } else if (std::find(unary_fns.begin(), unary_fns.end(), fn) != unary_fns.end()) {
            if (n->args.size() != 1) fail(fn + " takes one argument");
            n->kind = NodeKind::Call;
        } else if (std::find(binary_fns.begin(), binary_fns.end(), fn) != binary_fns.end()) {
            if (n->args.size() != 2) fail(fn + " takes two arguments");
            n->kind = NodeKind::Call;
        } else {
            fail("unknown function '" + fn + "'");
        }
        return n;
    }

    const std::string& src_;
    std::size_t pos_ = 0;
};

double eval(const ExprNode& n, const EvalContext& ctx);

double integrate(const ExprNode& body, const EvalContext& ctx) {
    const auto path = ctx.coords;
    if (path.empty()) throw InputError("integral(...) needs a path argument");
    const double dt = ctx.terminal_time / static_cast<double>(path.size());
    EvalContext inner = ctx;
    inner.t = 0.0;
    inner.w = 0.0;
    double prev = eval(body, inner);
    double sum = 0.0;
    for (std::size_t i = 0; i < path.size(); ++i) {
        inner.t = dt * static_cast<double>(i + 1);
        inner.w = path[i];
        const double cur = eval(body, inner);
        sum += 0.5 * (prev + cur) * dt;
        prev = cur;
    }
    return sum;
}

double eval(const ExprNode& n, const EvalContext& ctx) {
    switch (n.kind) {
    case NodeKind::Number:
        return n.value;
    case NodeKind::Coord:
        if (static_cast<std::size_t>(n.index) >= ctx.coords.size())
            throw InputError("expression reads x" + std::to_string(n.index + 1) + " but the point has " +
                             std::to_string(ctx.coords.size()) + " coordinates");
        return ctx.coords[static_cast<std::size_t>(n.index)];
    case NodeKind::Time:
        return ctx.t;
    case NodeKind::PathValue:
        return ctx.w;
    case NodeKind::Terminal:
        if (ctx.coords.empty()) throw InputError("wT needs a path argument");
        return ctx.coords.back();
    case NodeKind::Unary:
        return -eval(*n.args[0], ctx);
    case NodeKind::Binary: {
        const double a = eval(*n.args[0], ctx);
        const double b = eval(*n.args[1], ctx);
        switch (n.op) {
        case '+': return a + b;
        case '-': return a - b;
        case '*': return a * b;
        case '/': return a / b;
        case '^': return std::pow(a, b);
        }
        break;
    }
    case NodeKind::Call: {
        const double a = eval(*n.args[0], ctx);
        if (n.fn == "sin") return std::sin(a);
        if (n.fn == "cos") return std::cos(a);
        if (n.fn == "tan") return std::tan(a);
        if (n.fn == "exp") return std::exp(a);
        if (n.fn == "log") return std::log(a);
        if (n.fn == "sqrt") return std::sqrt(a);
        if (n.fn == "tanh") return std::tanh(a);
        if (n.fn == "abs") return std::fabs(a);
        const double b = eval(*n.args[1], ctx);
        if (n.fn == "min") return std::min(a, b);
        if (n.fn == "max") return std::max(a, b);
        break;
    }
    case NodeKind::Integral:
        return integrate(*n.args[0], ctx);
    }
    throw InputError("corrupt expression tree");
}

template <typename Pred>
bool any_node(const ExprNode& n, Pred pred) {
    if (pred(n)) return true;
    return std::any_of(n.args.begin(), n.args.end(), [&](const NodePtr& a) { return any_node(*a, pred); });
}

int max_coord(const ExprNode& n) {
    int m = n.kind == NodeKind::Coord ? n.index + 1 : 0;
    for (const auto& a : n.args) m = std::max(m, max_coord(*a));
    return m;
}

}  // namespace

Expression::Expression() : root_(make_number(0.0)), source_("0") {}

Expression Expression::parse(const std::string& source) {
    Expression e;
    e.root_ = Parser(source).parse();
    e.source_ = source;
    return e;
}

Expression Expression::constant(double value) {
    Expression e;
    e.root_ = make_number(value);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    e.source_ = buf;
    return e;
}

double Expression::evaluate(const EvalContext& ctx) const { return eval(*root_, ctx); }

bool Expression::is_constant() const {
    return !any_node(*root_, [](const ExprNode& n) {
        return n.kind == NodeKind::Coord || n.kind == NodeKind::Time || n.kind == NodeKind::PathValue ||
               n.kind == NodeKind::Terminal || n.kind == NodeKind::Integral;
    });
}

int Expression::max_coordinate() const { return max_coord(*root_); }

bool Expression::terminal_only() const {
    return !any_node(*root_, [](const ExprNode& n) {
        return n.kind == NodeKind::Coord || n.kind == NodeKind::Time || n.kind == NodeKind::PathValue ||
               n.kind == NodeKind::Integral;
    });
}

bool Expression::uses_path_primitives() const {
    return any_node(*root_, [](const ExprNode& n) {
        return n.kind == NodeKind::PathValue || n.kind == NodeKind::Terminal || n.kind == NodeKind::Integral;
    });
}

}  // namespace omlab
