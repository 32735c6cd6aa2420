#pragma once

// Requestor-supplied task templates. Templates are untrusted HTML: they are
// sanitized before use and only receive HTML-escaped payload values.

#include <string>
#include <string_view>

#include "crowdcafe/model.hpp"

namespace crowdcafe {

/// Drops script-capable content: <script>, <style>, <iframe>, <object>,
/// <embed>, <frame>, <frameset>, <base>, <meta> and comments; on* event
/// attributes; javascript:, vbscript: and data:text/html URLs.
std::string sanitize_html(std::string_view html);

std::string escape_html(std::string_view text);

/// Replaces {{name}} (surrounding spaces allowed) with the escaped payload
/// value; unknown names become empty.
std::string substitute_placeholders(std::string_view tmpl, const Payload& payload);

/// Fallback template listing the payload and one input per answer field.
std::string default_template(const Job& job, const Payload& payload);

/// sanitize_html then substitute_placeholders.
std::string render_unit(std::string_view tmpl, const Payload& payload);

}  // namespace crowdcafe
