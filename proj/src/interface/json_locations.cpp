#include "json_locations.hpp"

#include <cctype>

namespace cepdsl::detail {

TextPosition position_at(std::string_view text, std::size_t offset) {
    TextPosition p;
    for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++p.line;
            p.column = 1;
        } else {
            ++p.column;
        }
    }
    return p;
}

std::string join_path(const std::string& parent, const std::string& key) {
    return parent.empty() ? key : parent + "." + key;
}

std::string index_path(const std::string& parent, std::size_t index) {
    return parent + "[" + std::to_string(index) + "]";
}

namespace {

class Scanner {
public:
    explicit Scanner(std::string_view text) : text_(text) {}

    std::map<std::string, TextPosition> run() {
        skip_ws();
        value("");
        return std::move(found_);
    }

private:
    bool done() const { return pos_ >= text_.size(); }

    void skip_ws() {
        while (!done() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    // Returns false on malformed input; the caller stops.
    bool value(const std::string& path) {
        if (done()) return false;
        found_[path] = position_at_fast();
        char c = text_[pos_];
        if (c == '{') return object(path);
        if (c == '[') return array(path);
        if (c == '"') return string(nullptr);
        while (!done() && text_[pos_] != ',' && text_[pos_] != '}' && text_[pos_] != ']' &&
               !std::isspace(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
        return true;
    }

    bool object(const std::string& path) {
        ++pos_;
        skip_ws();
        if (!done() && text_[pos_] == '}') {
            ++pos_;
            return true;
        }
        while (!done()) {
            skip_ws();
            std::string key;
            if (done() || text_[pos_] != '"' || !string(&key)) return false;
            skip_ws();
            if (done() || text_[pos_] != ':') return false;
            ++pos_;
            skip_ws();
            if (!value(join_path(path, key))) return false;
            skip_ws();
            if (done()) return false;
            if (text_[pos_] == '}') {
                ++pos_;
                return true;
            }
            if (text_[pos_] != ',') return false;
            ++pos_;
        }
        return false;
    }

    bool array(const std::string& path) {
        ++pos_;
        skip_ws();
        if (!done() && text_[pos_] == ']') {
            ++pos_;
            return true;
        }
        for (std::size_t i = 0; !done(); ++i) {
            skip_ws();
            if (!value(index_path(path, i))) return false;
            skip_ws();
            if (done()) return false;
            if (text_[pos_] == ']') {
                ++pos_;
                return true;
            }
            if (text_[pos_] != ',') return false;
            ++pos_;
        }
        return false;
    }

    // Keys are compared raw; escapes other than \" and \\ are kept verbatim.
    bool string(std::string* out) {
        ++pos_;
        while (!done()) {
            char c = text_[pos_++];
            if (c == '"') return true;
            if (c == '\\' && !done()) c = text_[pos_++];
            if (out) *out += c;
        }
        return false;
    }

    TextPosition position_at_fast() {
        for (; scanned_ < pos_; ++scanned_) {
            if (text_[scanned_] == '\n') {
                ++at_.line;
                at_.column = 1;
            } else {
                ++at_.column;
            }
        }
        return at_;
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    std::size_t scanned_ = 0;
    TextPosition at_;
    std::map<std::string, TextPosition> found_;
};

}  // namespace

std::map<std::string, TextPosition> locate_values(std::string_view text) { return Scanner(text).run(); }

}  // namespace cepdsl::detail
