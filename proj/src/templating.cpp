#include "crowdcafe/templating.hpp"

#include <algorithm>
#include <cctype>
#include <optional>
#include <vector>

namespace crowdcafe {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f'; }

bool is_name_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == ':';
}

// Elements dropped together with their content.
bool drops_content(const std::string& tag) {
  return tag == "script" || tag == "style" || tag == "iframe" || tag == "object" || tag == "frameset" ||
         tag == "noscript" || tag == "template";
}

// Elements dropped on their own.
bool drops_tag(const std::string& tag) {
  return tag == "embed" || tag == "frame" || tag == "base" || tag == "meta" || tag == "link" || tag == "applet";
}

bool url_attr(const std::string& name) {
  return name == "href" || name == "src" || name == "action" || name == "xlink:href" || name == "background" ||
         name == "poster" || name == "cite" || name == "data" || name == "lowsrc" || name == "dynsrc";
}

// Decodes numeric character references so "jav&#x61;script:" is caught.
std::string decode_numeric_refs(std::string_view v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] == '&' && i + 2 < v.size() && v[i + 1] == '#') {
      std::size_t j = i + 2;
      const bool hex = j < v.size() && (v[j] == 'x' || v[j] == 'X');
      if (hex) ++j;
      unsigned long code = 0;
      const std::size_t digits = j;
      while (j < v.size() && (hex ? std::isxdigit(static_cast<unsigned char>(v[j])) : std::isdigit(static_cast<unsigned char>(v[j])))) {
        code = code * (hex ? 16 : 10) + static_cast<unsigned long>(std::stoul(std::string(1, v[j]), nullptr, 16));
        if (code > 0x10FFFF) code = 0x10FFFF;
        ++j;
      }
      if (j > digits) {
        if (j < v.size() && v[j] == ';') ++j;
        out.push_back(code < 0x80 ? static_cast<char>(code) : '?');
        i = j - 1;
        continue;
      }
    }
    out.push_back(v[i]);
  }
  return out;
}

bool dangerous_url(std::string_view value) {
  std::string compact;
  for (char c : decode_numeric_refs(value)) {
    if (static_cast<unsigned char>(c) <= 0x20) continue;
    compact.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return compact.rfind("javascript:", 0) == 0 || compact.rfind("vbscript:", 0) == 0 ||
         compact.rfind("data:text/html", 0) == 0 || compact.rfind("data:image/svg", 0) == 0;
}

struct Attr {
  std::string name;
  std::optional<std::string> value;
};

// Parses the inside of a start tag after its name. Returns the position
// after '>' (or end of input) and whether the tag self-closes.
std::size_t parse_attrs(std::string_view s, std::size_t i, std::vector<Attr>& attrs, bool& self_close) {
  self_close = false;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    if (i >= s.size()) break;
    if (s[i] == '>') return i + 1;
    if (s[i] == '/') {
      self_close = true;
      ++i;
      continue;
    }
    std::size_t start = i;
    while (i < s.size() && !is_space(s[i]) && s[i] != '=' && s[i] != '>' && s[i] != '/') ++i;
    if (i == start) {  // stray character
      ++i;
      continue;
    }
    Attr a{lower(s.substr(start, i - start)), std::nullopt};
    while (i < s.size() && is_space(s[i])) ++i;
    if (i < s.size() && s[i] == '=') {
      ++i;
      while (i < s.size() && is_space(s[i])) ++i;
      if (i < s.size() && (s[i] == '"' || s[i] == '\'')) {
        const char q = s[i++];
        const std::size_t end = s.find(q, i);
        const std::size_t stop = end == std::string_view::npos ? s.size() : end;
        a.value = std::string(s.substr(i, stop - i));
        i = end == std::string_view::npos ? s.size() : end + 1;
      } else {
        start = i;
        while (i < s.size() && !is_space(s[i]) && s[i] != '>') ++i;
        a.value = std::string(s.substr(start, i - start));
      }
    }
    attrs.push_back(std::move(a));
  }
  return s.size();
}

std::string escape_attr(std::string_view v) {
  std::string out;
  for (char c : v) {
    switch (c) {
      case '"': out += "&quot;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

}  // namespace

std::string sanitize_html(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    if (c != '<') {
      out.push_back(c);
      ++i;
      continue;
    }
    if (s.substr(i, 4) == "<!--") {
      const auto end = s.find("-->", i + 4);
      i = end == std::string_view::npos ? s.size() : end + 3;
      continue;
    }
    std::size_t j = i + 1;
    const bool closing = j < s.size() && s[j] == '/';
    if (closing) ++j;
    const std::size_t name_start = j;
    while (j < s.size() && is_name_char(s[j])) ++j;
    if (j == name_start) {  // not a tag: "<" text, "<!doctype", "<?"
      if (j < s.size() && (s[j] == '!' || s[j] == '?')) {
        const auto end = s.find('>', j);
        i = end == std::string_view::npos ? s.size() : end + 1;
      } else {
        out += "&lt;";
        ++i;
      }
      continue;
    }
    const std::string tag = lower(s.substr(name_start, j - name_start));
    std::vector<Attr> attrs;
    bool self_close = false;
    const std::size_t after = parse_attrs(s, j, attrs, self_close);

    if (drops_content(tag)) {
      if (!closing && !self_close) {
        // Skip to the matching close tag; an unterminated element swallows the rest.
        const std::string low = lower(s.substr(after));
        const auto end = low.find("</" + tag);
        if (end == std::string::npos) {
          i = s.size();
        } else {
          const auto gt = s.find('>', after + end);
          i = gt == std::string_view::npos ? s.size() : gt + 1;
        }
      } else {
        i = after;
      }
      continue;
    }
    if (drops_tag(tag)) {
      i = after;
      continue;
    }

    out.push_back('<');
    if (closing) out.push_back('/');
    out += tag;
    if (!closing) {
      for (const auto& a : attrs) {
        if (!std::all_of(a.name.begin(), a.name.end(), is_name_char)) continue;
        if (a.name.rfind("on", 0) == 0 || a.name == "style" || a.name == "srcdoc" || a.name == "formaction") continue;
        if (a.value && url_attr(a.name) && dangerous_url(*a.value)) continue;
        out.push_back(' ');
        out += a.name;
        if (a.value) out += "=\"" + escape_attr(*a.value) + "\"";
      }
      if (self_close) out += " /";
    }
    out.push_back('>');
    i = after;
  }
  return out;
}

std::string escape_html(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&#39;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string substitute_placeholders(std::string_view tmpl, const Payload& payload) {
  std::string out;
  std::size_t i = 0;
  while (i < tmpl.size()) {
    const auto open = tmpl.find("{{", i);
    if (open == std::string_view::npos) break;
    const auto close = tmpl.find("}}", open + 2);
    if (close == std::string_view::npos) break;
    out.append(tmpl.substr(i, open - i));
    std::string_view name = tmpl.substr(open + 2, close - open - 2);
    while (!name.empty() && is_space(name.front())) name.remove_prefix(1);
    while (!name.empty() && is_space(name.back())) name.remove_suffix(1);
    if (auto it = payload.find(std::string(name)); it != payload.end()) out += escape_html(it->second);
    i = close + 2;
  }
  out.append(tmpl.substr(i));
  return out;
}

std::string default_template(const Job& job, const Payload& payload) {
  std::string out = "<div class=\"unit\">\n";
  for (const auto& [name, value] : payload) {
    (void)value;
    if (name == "media_url") {
      out += "  <img src=\"{{media_url}}\" alt=\"\">\n";
    } else {
      out += "  <p><b>" + escape_html(name) + "</b>: {{" + name + "}}</p>\n";
    }
  }
  for (const auto& f : job.fields) {
    out += "  <label>" + escape_html(f.name) + " <input name=\"" + escape_html(f.name) + "\" data-kind=\"" +
           std::string(to_string(f.kind)) + "\"" + (f.required ? " required" : "") + "></label>\n";
  }
  out += "</div>\n";
  return out;
}

std::string render_unit(std::string_view tmpl, const Payload& payload) {
  // Values are escaped, so the second pass only sees attribute-level hazards
  // such as a javascript: URL coming from the payload.
  return sanitize_html(substitute_placeholders(sanitize_html(tmpl), payload));
}

}  // namespace crowdcafe
