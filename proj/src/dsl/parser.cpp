#include "tc/dsl/parser.hpp"

#include <charconv>
#include <vector>

namespace tc::dsl {

const std::string& Trigger::name() const {
    static const std::string request = kRequestTrigger;
    return kind == Kind::Request ? request : event_type;
}

const RoleSpec* CoordinationLogic::find_role(std::string_view role) const {
    for (const auto& r : roles) {
        if (r.name == role) return &r;
    }
    return nullptr;
}

ParseError::ParseError(int line, int column, std::string message)
    : std::runtime_error(std::to_string(line) + ":" + std::to_string(column) + ": " + message),
      line_(line),
      column_(column),
      message_(std::move(message)) {}

namespace {

enum class Tok { Ident, Number, String, LBrace, RBrace, LParen, RParen, Comma, Dot, Arrow, EqEq, NotEq, End };

struct Token {
    Tok kind = Tok::End;
    std::string text;  // identifier name, decoded string, or number spelling
    SourcePos pos;
};

std::string describe(const Token& t) {
    switch (t.kind) {
        case Tok::Ident: return "identifier '" + t.text + "'";
        case Tok::Number: return "number " + t.text;
        case Tok::String: return "string literal";
        case Tok::LBrace: return "'{'";
        case Tok::RBrace: return "'}'";
        case Tok::LParen: return "'('";
        case Tok::RParen: return "')'";
        case Tok::Comma: return "','";
        case Tok::Dot: return "'.'";
        case Tok::Arrow: return "'->'";
        case Tok::EqEq: return "'=='";
        case Tok::NotEq: return "'!='";
        case Tok::End: return "end of input";
    }
    return "?";
}

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    Token next() {
        skip_trivia();
        Token t;
        t.pos = {line_, col_};
        if (at_end()) return t;
        char c = peek();
        if (is_ident_start(c)) {
            t.kind = Tok::Ident;
            while (!at_end() && is_ident_body(peek())) t.text += take();
        } else if (is_digit(c)) {
            t.kind = Tok::Number;
            while (!at_end() && is_digit(peek())) t.text += take();
            if (!at_end() && peek() == '.' && pos_ + 1 < src_.size() && is_digit(src_[pos_ + 1])) {
                t.text += take();
                while (!at_end() && is_digit(peek())) t.text += take();
            }
        } else if (c == '"') {
            t.kind = Tok::String;
            lex_string(t);
        } else {
            lex_punct(t);
        }
        return t;
    }

private:
    static bool is_ident_start(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }
    static bool is_digit(char c) { return c >= '0' && c <= '9'; }
    static bool is_ident_body(char c) { return is_ident_start(c) || is_digit(c); }

    bool at_end() const { return pos_ >= src_.size(); }
    char peek() const { return src_[pos_]; }

    char take() {
        char c = src_[pos_++];
        if (c == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        return c;
    }

    void skip_trivia() {
        while (!at_end()) {
            char c = peek();
            if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                take();
            } else if (c == '#') {
                while (!at_end() && peek() != '\n') take();
            } else {
                return;
            }
        }
    }

    void lex_string(Token& t) {
        take();  // opening quote
        while (true) {
            if (at_end()) throw ParseError(t.pos.line, t.pos.column, "unterminated string literal");
            int line = line_, col = col_;
            char c = take();
            if (c == '"') return;
            if (c == '\\') {
                if (at_end()) throw ParseError(t.pos.line, t.pos.column, "unterminated string literal");
                char e = take();
                if (e != '"' && e != '\\')
                    throw ParseError(line, col, std::string("invalid escape sequence '\\") + e + "'");
                t.text += e;
            } else {
                t.text += c;
            }
        }
    }

    void lex_punct(Token& t) {
        char c = take();
        switch (c) {
            case '{': t.kind = Tok::LBrace; return;
            case '}': t.kind = Tok::RBrace; return;
            case '(': t.kind = Tok::LParen; return;
            case ')': t.kind = Tok::RParen; return;
            case ',': t.kind = Tok::Comma; return;
            case '.': t.kind = Tok::Dot; return;
            case '-':
                if (!at_end() && peek() == '>') {
                    take();
                    t.kind = Tok::Arrow;
                    return;
                }
                break;
            case '=':
                if (!at_end() && peek() == '=') {
                    take();
                    t.kind = Tok::EqEq;
                    return;
                }
                break;
            case '!':
                if (!at_end() && peek() == '=') {
                    take();
                    t.kind = Tok::NotEq;
                    return;
                }
                break;
            default: break;
        }
        auto u = static_cast<unsigned char>(c);
        std::string shown = (u >= 0x20 && u < 0x7f) ? std::string("'") + c + "'" : "byte 0x" + hex(u);
        throw ParseError(t.pos.line, t.pos.column, "unexpected character " + shown);
    }

    static std::string hex(unsigned char u) {
        static const char* digits = "0123456789abcdef";
        return {digits[u >> 4], digits[u & 0xf]};
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
};

class Parser {
public:
    explicit Parser(std::string_view source) : lexer_(source), cur_(lexer_.next()) {}

    CoordinationLogic logic() {
        CoordinationLogic out;
        expect_keyword("service");
        out.name = expect(Tok::Ident, "service name").text;
        expect(Tok::LBrace, "'{'");
        while (is_keyword("role")) out.roles.push_back(role());
        while (is_keyword("on")) out.handlers.push_back(handler());
        if (cur().kind != Tok::RBrace) fail("expected 'role', 'on' or '}'");
        advance();
        if (cur().kind != Tok::End) fail("expected end of input");
        return out;
    }

private:
    static constexpr int kMaxDepth = 200;

    const Token& cur() const { return cur_; }
    void advance() {
        if (cur_.kind != Tok::End) cur_ = lexer_.next();
    }

    [[noreturn]] void fail(const std::string& expected) const {
        const auto& t = cur();
        std::string msg = t.kind == Tok::End ? "unexpected end of input" : "unexpected " + describe(t);
        throw ParseError(t.pos.line, t.pos.column, msg + "; " + expected);
    }

    bool is_keyword(std::string_view kw) const { return cur().kind == Tok::Ident && cur().text == kw; }

    void expect_keyword(std::string_view kw) {
        if (!is_keyword(kw)) fail("expected '" + std::string(kw) + "'");
        advance();
    }

    Token expect(Tok kind, const std::string& what) {
        if (cur().kind != kind) fail("expected " + what);
        Token t = cur();
        advance();
        return t;
    }

    RoleSpec role() {
        RoleSpec r;
        r.pos = cur().pos;
        expect_keyword("role");
        r.name = expect(Tok::Ident, "role name").text;
        expect_keyword("requires");
        expect_keyword("capability");
        r.capability = expect(Tok::Ident, "capability name").text;
        while (cur().kind == Tok::Dot) {
            advance();
            r.capability += '.';
            r.capability += expect(Tok::Ident, "capability name segment").text;
        }
        while (true) {
            if (is_keyword("near")) {
                advance();
                expect_keyword("user");
                NearUser near;
                if (is_keyword("within")) {
                    advance();
                    near.radius_m = number(expect(Tok::Number, "radius"));
                    expect_keyword("m");
                }
                r.constraints.emplace_back(near);
            } else if (is_keyword("in")) {
                advance();
                expect_keyword("zone");
                r.constraints.emplace_back(InZone{expect(Tok::String, "zone string").text});
            } else {
                return r;
            }
        }
    }

    Handler handler() {
        Handler h;
        h.pos = cur().pos;
        expect_keyword("on");
        auto name = expect(Tok::Ident, "trigger name").text;
        if (name == kRequestTrigger) {
            h.trigger.kind = Trigger::Kind::Request;
        } else {
            h.trigger.kind = Trigger::Kind::Event;
            h.trigger.event_type = name;
        }
        expect(Tok::LParen, "'('");
        if (cur().kind != Tok::RParen) {
            h.trigger.params.push_back(expect(Tok::Ident, "parameter name").text);
            while (cur().kind == Tok::Comma) {
                advance();
                h.trigger.params.push_back(expect(Tok::Ident, "parameter name").text);
            }
        }
        expect(Tok::RParen, "')'");
        if (is_keyword("when")) {
            advance();
            Condition c;
            c.lhs = expr(0);
            if (cur().kind == Tok::EqEq) {
                c.op = RelOp::Eq;
            } else if (cur().kind == Tok::NotEq) {
                c.op = RelOp::Ne;
            } else {
                fail("expected '==' or '!='");
            }
            advance();
            c.rhs = expr(0);
            h.guard = std::move(c);
        }
        expect(Tok::LBrace, "'{'");
        while (cur().kind == Tok::Ident) h.body.push_back(statement());
        expect(Tok::RBrace, "statement or '}'");
        return h;
    }

    Statement statement() {
        Statement s;
        s.pos = cur().pos;
        s.role = expect(Tok::Ident, "role name").text;
        expect(Tok::Dot, "'.'");
        s.verb = expect(Tok::Ident, "verb").text;
        s.args = arg_list(0);
        if (cur().kind == Tok::Arrow) {
            advance();
            s.subscription = expect(Tok::Ident, "event type").text;
        }
        return s;
    }

    std::vector<Expr> arg_list(int depth) {
        std::vector<Expr> args;
        expect(Tok::LParen, "'('");
        if (cur().kind != Tok::RParen) {
            args.push_back(expr(depth));
            while (cur().kind == Tok::Comma) {
                advance();
                args.push_back(expr(depth));
            }
        }
        expect(Tok::RParen, "',' or ')'");
        return args;
    }

    Expr expr(int depth) {
        if (depth > kMaxDepth) fail("expression nested too deeply");
        Expr e;
        e.pos = cur().pos;
        switch (cur().kind) {
            case Tok::String:
                e.node = StringLit{cur().text};
                advance();
                return e;
            case Tok::Number:
                e.node = NumberLit{number(cur())};
                advance();
                return e;
            case Tok::Ident: {
                auto name = cur().text;
                advance();
                if (cur().kind == Tok::LParen) {
                    e.node = TableCall{std::move(name), arg_list(depth + 1)};
                } else {
                    e.node = VarRef{std::move(name)};
                }
                return e;
            }
            default: fail("expected expression");
        }
    }

    double number(const Token& t) const {
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
        if (ec != std::errc() || ptr != t.text.data() + t.text.size())
            throw ParseError(t.pos.line, t.pos.column, "number out of range: " + t.text);
        return v;
    }

    Lexer lexer_;
    Token cur_;
};

}  // namespace

CoordinationLogic parse(std::string_view source) {
    return Parser(source).logic();
}

}  // namespace tc::dsl
