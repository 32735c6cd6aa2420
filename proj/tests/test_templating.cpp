#include <gtest/gtest.h>

#include <random>

#include "crowdcafe/templating.hpp"

using namespace crowdcafe;

namespace {

bool contains(const std::string& hay, const std::string& needle) { return hay.find(needle) != std::string::npos; }

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

TEST(Sanitize, DropsScriptsWithContent) {
  const auto out = sanitize_html("<p>hi</p><script>alert(1)</script><SCRIPT src=x></SCRIPT><b>ok</b>");
  EXPECT_FALSE(contains(lower(out), "script"));
  EXPECT_FALSE(contains(out, "alert"));
  EXPECT_TRUE(contains(out, "<p>hi</p>"));
  EXPECT_TRUE(contains(out, "<b>ok</b>"));
}

TEST(Sanitize, DropsDangerousElements) {
  const auto out = sanitize_html(
      "<style>body{}</style><iframe src=x>in</iframe><object>o</object><embed src=x><base href=x>"
      "<meta http-equiv=refresh><link rel=import><!-- secret --><img src=a.jpg>");
  for (const char* bad : {"style", "iframe", "object", "embed", "base", "meta", "link", "secret", "body{}"})
    EXPECT_FALSE(contains(lower(out), bad)) << bad << " in " << out;
  EXPECT_TRUE(contains(out, "a.jpg"));
}

TEST(Sanitize, DropsEventHandlersAndScriptUrls) {
  const auto out = sanitize_html(
      "<img src=\"a.jpg\" onerror=\"alert(1)\" ONLOAD=x>"
      "<a href=\"javascript:alert(1)\">x</a><a href=' JaVaScRiPt:alert(1)'>y</a>"
      "<a href=\"jav&#x61;script:alert(1)\">z</a><a href=\"vbscript:msg\">v</a>"
      "<a href=\"data:text/html;base64,AAAA\">d</a><a href=\"https://example.org\">ok</a>");
  EXPECT_FALSE(contains(lower(out), "onerror"));
  EXPECT_FALSE(contains(lower(out), "onload"));
  EXPECT_FALSE(contains(lower(out), "javascript"));
  EXPECT_FALSE(contains(out, "jav&#x61;"));
  EXPECT_FALSE(contains(lower(out), "vbscript"));
  EXPECT_FALSE(contains(lower(out), "data:text/html"));
  EXPECT_TRUE(contains(out, "https://example.org"));
  EXPECT_TRUE(contains(out, "a.jpg"));
}

TEST(Sanitize, NoScriptSurvivesFuzz) {
  // Random splices of hostile fragments never leave an executable tag or
  // handler attribute behind.
  const std::vector<std::string> parts{"<script>", "</script>", "<p>", "</p>", "<img src=x onerror=y>",
                                       "<a href=javascript:1>", "text", "<!--", "-->", "<scr", "ipt>",
                                       "<svg onload=1>", "\"", "'", ">", "<"};
  std::mt19937 rng(31);
  for (int i = 0; i < 2000; ++i) {
    std::string html;
    const int n = 1 + static_cast<int>(rng() % 12);
    for (int k = 0; k < n; ++k) html += parts[rng() % parts.size()];
    const std::string out = lower(sanitize_html(html));
    EXPECT_FALSE(contains(out, "<script")) << html << " -> " << out;
    EXPECT_FALSE(contains(out, "onerror=")) << html << " -> " << out;
    EXPECT_FALSE(contains(out, "onload=")) << html << " -> " << out;
    EXPECT_FALSE(contains(out, "href=javascript")) << html << " -> " << out;
  }
}

TEST(Escape, Basics) {
  EXPECT_EQ(escape_html("<a href=\"x\">&'</a>"), "&lt;a href=&quot;x&quot;&gt;&amp;&#39;&lt;/a&gt;");
}

TEST(Substitute, Placeholders) {
  const Payload p{{"text", "<b>Duomo</b>"}, {"media_url", "https://m/x.jpg"}};
  EXPECT_EQ(substitute_placeholders("<p>{{text}}</p><p>{{ text }}</p><p>{{missing}}</p>", p),
            "<p>&lt;b&gt;Duomo&lt;/b&gt;</p><p>&lt;b&gt;Duomo&lt;/b&gt;</p><p></p>");
  EXPECT_EQ(substitute_placeholders("{{ not closed", p), "{{ not closed");
}

TEST(Render, PayloadCannotInjectScriptUrl) {
  const Payload p{{"media_url", "javascript:alert(1)"}};
  const auto out = render_unit("<a href=\"{{media_url}}\">open</a>", p);
  EXPECT_FALSE(contains(lower(out), "javascript"));
  EXPECT_TRUE(contains(out, "open"));
}

TEST(Render, DefaultTemplateListsFields) {
  Job job;
  job.fields = {{"tags", ValueKind::List, true}, {"relevant", ValueKind::Text, false}};
  const Payload p{{"media_url", "https://m/1.jpg"}, {"author", "anna"}};
  const auto out = render_unit(default_template(job, p), p);
  EXPECT_TRUE(contains(out, "<img src=\"https://m/1.jpg\""));
  EXPECT_TRUE(contains(out, "anna"));
  EXPECT_TRUE(contains(out, "name=\"tags\""));
  EXPECT_TRUE(contains(out, "data-kind=\"list\" required"));
  EXPECT_TRUE(contains(out, "name=\"relevant\" data-kind=\"text\">"));
}
