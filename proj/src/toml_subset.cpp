// A small TOML reader covering what experiment files use.
#include <cctype>
#include <fstream>
#include <sstream>

#include "thickpoints/harness.hpp"

namespace thick {

namespace {

class TomlParser {
public:
    explicit TomlParser(const std::string& text) : s_(text) {}

    Json parse() {
        Json root = Json::object();
        Json* table = &root;
        for (;;) {
            skip_blank_lines();
            if (pos_ >= s_.size()) break;
            if (s_[pos_] == '[') {
                ++pos_;
                if (peek() == '[') fail("arrays of tables are not supported");
                const std::vector<std::string> path = key_path();
                skip_inline_space();
                expect(']');
                table = &descend(root, path, true);
            } else {
                const std::vector<std::string> path = key_path();
                skip_inline_space();
                expect('=');
                skip_inline_space();
                Json v = value();
                Json* t = table;
                for (std::size_t i = 0; i + 1 < path.size(); ++i) t = &child(*t, path[i]);
                if (t->contains(path.back())) fail("duplicate key '" + path.back() + "'");
                (*t)[path.back()] = std::move(v);
            }
            end_of_line();
        }
        return root;
    }

private:
    [[noreturn]] void fail(const std::string& msg) const {
        throw FormatError("toml line " + std::to_string(line()) + ": " + msg);
    }

    std::size_t line() const {
        std::size_t n = 1;
        for (std::size_t i = 0; i < pos_ && i < s_.size(); ++i)
            if (s_[i] == '\n') ++n;
        return n;
    }

    char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }

    void expect(char c) {
        if (peek() != c) fail(std::string("expected '") + c + "'");
        ++pos_;
    }

    void skip_inline_space() {
        while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
    }

    void skip_comment() {
        if (peek() == '#')
            while (pos_ < s_.size() && s_[pos_] != '\n') ++pos_;
    }

    void skip_blank_lines() {
        for (;;) {
            skip_inline_space();
            skip_comment();
            if (peek() == '\n' || peek() == '\r') {
                ++pos_;
                continue;
            }
            return;
        }
    }

    // whitespace, comments and newlines inside arrays
    void skip_any_space() {
        for (;;) {
            const char c = peek();
            if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
                ++pos_;
            } else if (c == '#') {
                skip_comment();
            } else {
                return;
            }
        }
    }

    void end_of_line() {
        skip_inline_space();
        skip_comment();
        if (pos_ >= s_.size()) return;
        if (peek() == '\r') ++pos_;
        if (peek() != '\n') fail("unexpected text after value");
        ++pos_;
    }

    std::string bare_or_quoted_key() {
        if (peek() == '"') return basic_string();
        const std::size_t b = pos_;
        while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_' || s_[pos_] == '-'))
            ++pos_;
        if (b == pos_) fail("expected a key");
        return s_.substr(b, pos_ - b);
    }

    std::vector<std::string> key_path() {
        std::vector<std::string> out;
        skip_inline_space();
        out.push_back(bare_or_quoted_key());
        for (;;) {
            skip_inline_space();
            if (peek() != '.') break;
            ++pos_;
            skip_inline_space();
            out.push_back(bare_or_quoted_key());
        }
        return out;
    }

    Json& child(Json& t, const std::string& k) {
        if (!t.contains(k)) t[k] = Json::object();
        if (!t[k].is_object()) fail("key '" + k + "' is not a table");
        return t[k];
    }

    Json& descend(Json& root, const std::vector<std::string>& path, bool) {
        Json* t = &root;
        for (const std::string& k : path) t = &child(*t, k);
        return *t;
    }

    std::string basic_string() {
        expect('"');
        std::string out;
        for (;;) {
            if (pos_ >= s_.size() || s_[pos_] == '\n') fail("unterminated string");
            const char c = s_[pos_++];
            if (c == '"') return out;
            if (c != '\\') {
                out += c;
                continue;
            }
            if (pos_ >= s_.size()) fail("unterminated escape");
            const char e = s_[pos_++];
            switch (e) {
                case 'n': out += '\n'; break;
                case 't': out += '\t'; break;
                case 'r': out += '\r'; break;
                case '"': out += '"'; break;
                case '\\': out += '\\'; break;
                default: fail(std::string("unsupported escape \\") + e);
            }
        }
    }

    Json value() {
        const char c = peek();
        if (c == '"') return basic_string();
        if (c == '\'') {
            ++pos_;
            const std::size_t b = pos_;
            while (pos_ < s_.size() && s_[pos_] != '\'' && s_[pos_] != '\n') ++pos_;
            if (peek() != '\'') fail("unterminated literal string");
            return s_.substr(b, pos_++ - b);
        }
        if (c == '[') return array();
        if (c == '{') fail("inline tables are not supported");
        if (s_.compare(pos_, 4, "true") == 0) {
            pos_ += 4;
            return true;
        }
        if (s_.compare(pos_, 5, "false") == 0) {
            pos_ += 5;
            return false;
        }
        return number();
    }

    Json array() {
        expect('[');
        Json out = Json::array();
        for (;;) {
            skip_any_space();
            if (peek() == ']') {
                ++pos_;
                return out;
            }
            out.push_back(value());
            skip_any_space();
            if (peek() == ',') {
                ++pos_;
            } else if (peek() != ']') {
                fail("expected ',' or ']' in array");
            }
        }
    }

    Json number() {
        const std::size_t b = pos_;
        while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '+' ||
                                    s_[pos_] == '-' || s_[pos_] == '.' || s_[pos_] == '_'))
            ++pos_;
        std::string tok;
        for (std::size_t i = b; i < pos_; ++i)
            if (s_[i] != '_') tok += s_[i];
        if (tok.empty()) fail("expected a value");
        if (tok == "inf" || tok == "+inf") return std::numeric_limits<double>::infinity();
        if (tok == "-inf") return -std::numeric_limits<double>::infinity();
        const bool is_float = tok.find_first_of(".eE") != std::string::npos;
        try {
            std::size_t used = 0;
            if (is_float) {
                const double v = std::stod(tok, &used);
                if (used == tok.size()) return v;
            } else {
                const long long v = std::stoll(tok, &used, 10);
                if (used == tok.size()) return v;
            }
        } catch (const std::exception&) {
        }
        fail("malformed number '" + tok + "'");
    }

    const std::string& s_;
    std::size_t pos_ = 0;
};

}  // namespace

Json parse_toml(const std::string& text) { return TomlParser(text).parse(); }

Json load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    const bool toml = path.size() >= 5 && path.compare(path.size() - 5, 5, ".toml") == 0;
    if (toml) return parse_toml(text);
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw FormatError("config file " + path + ": " + e.what());
    }
}

}  // namespace thick
