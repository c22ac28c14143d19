//! Line normalization for comparing a solution with its ground truth.

/// A non-blank source line after normalization.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NormLine {
    /// 1-based line number in the original text.
    pub number: usize,
    /// Enclosing top-level function, `None` at module level.
    pub func: Option<String>,
    pub indent: usize,
    pub text: String,
}

fn strip_comment(line: &str) -> &str {
    let mut quote: Option<char> = None;
    let mut escaped = false;
    for (i, c) in line.char_indices() {
        match quote {
            Some(q) => {
                if escaped {
                    escaped = false;
                } else if c == '\\' {
                    escaped = true;
                } else if c == q {
                    quote = None;
                }
            }
            None if c == '"' || c == '\'' => quote = Some(c),
            None if c == '#' => return &line[..i],
            None => {}
        }
    }
    line
}

/// Drops whitespace outside strings, keeping one space where it separates
/// two word characters.
fn squeeze(s: &str) -> String {
    let chars: Vec<char> = s.chars().collect();
    let mut out = String::with_capacity(s.len());
    let mut in_str = false;
    for (i, &c) in chars.iter().enumerate() {
        if c == '"' {
            in_str = !in_str;
        }
        if in_str || !c.is_whitespace() {
            out.push(c);
            continue;
        }
        let next = chars[i..].iter().find(|c| !c.is_whitespace());
        let joins_words = out.chars().next_back().is_some_and(is_ident_char) && next.is_some_and(|c| is_ident_char(*c));
        if joins_words && !out.ends_with(' ') {
            out.push(' ');
        }
    }
    out
}

fn is_simple(s: &str) -> bool {
    s.chars().all(|c| c.is_alphanumeric() || c == '_' || c == '.')
}

/// Rewrites `x op= e` to `x = x op e`.
fn expand_augmented(s: &str) -> String {
    let chars: Vec<char> = s.chars().collect();
    let mut depth = 0i32;
    let mut in_str = false;
    for i in 0..chars.len() {
        let c = chars[i];
        if c == '"' {
            in_str = !in_str;
        }
        if in_str {
            continue;
        }
        match c {
            '(' | '[' | '{' => depth += 1,
            ')' | ']' | '}' => depth -= 1,
            '=' if depth == 0 => {
                if chars.get(i + 1) == Some(&'=') || i == 0 {
                    return s.to_string();
                }
                let before = chars[i - 1];
                let op_len = match before {
                    '/' if i >= 2 && chars[i - 2] == '/' => 2,
                    '+' | '-' | '*' | '/' | '%' => 1,
                    _ => return s.to_string(),
                };
                let lhs: String = chars[..i - op_len].iter().collect();
                let op: String = chars[i - op_len..i].iter().collect();
                let rhs: String = chars[i + 1..].iter().collect();
                let (lhs, rhs) = (lhs.trim(), rhs.trim());
                let rhs = if is_simple(rhs) { rhs.to_string() } else { format!("({rhs})") };
                return format!("{lhs} = {lhs} {op} {rhs}");
            }
            _ => {}
        }
    }
    s.to_string()
}

/// Canonical form of one line, or `None` for lines carrying no statement
/// (blank, comment, `pass`, `else:`).
pub fn normalize(line: &str) -> Option<String> {
    let s = strip_comment(line).trim().trim_end_matches(';').trim();
    if s.is_empty() || s == "pass" || s == "else:" {
        return None;
    }
    let s = s.replace('\'', "\"");
    Some(squeeze(&expand_augmented(&s)))
}

/// Every statement-bearing line of `code`.
pub fn lines(code: &str) -> Vec<NormLine> {
    let mut func = None;
    let mut out = Vec::new();
    for (i, raw) in code.lines().enumerate() {
        let Some(text) = normalize(raw) else { continue };
        let indent = raw.len() - raw.trim_start().len();
        if indent == 0 {
            func = (statement_kind(&text) == "def")
                .then(|| text.strip_prefix("def"))
                .flatten()
                .and_then(|rest| rest.split('(').next())
                .map(str::trim)
                .filter(|name| !name.is_empty())
                .map(str::to_string);
        }
        out.push(NormLine {
            number: i + 1,
            func: func.clone(),
            indent,
            text,
        });
    }
    out
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Removes every call of `name` in normalized text, keeping the arguments
/// when `keep_args` is set. Names starting with `.` match method calls.
pub fn remove_call(s: &str, name: &str, keep_args: bool) -> String {
    let pat = format!("{name}(");
    let mut out = String::new();
    let mut rest = s;
    while let Some(pos) = rest.find(&pat) {
        let bounded = name.starts_with('.') || !rest[..pos].chars().next_back().is_some_and(is_ident_char);
        if !bounded {
            out.push_str(&rest[..pos + pat.len()]);
            rest = &rest[pos + pat.len()..];
            continue;
        }
        out.push_str(&rest[..pos]);
        let after = &rest[pos + pat.len()..];
        let mut depth = 1;
        let mut end = after.len();
        for (i, c) in after.char_indices() {
            match c {
                '(' => depth += 1,
                ')' => {
                    depth -= 1;
                    if depth == 0 {
                        end = i;
                        break;
                    }
                }
                _ => {}
            }
        }
        let inner = &after[..end];
        if keep_args {
            out.push_str(&remove_call(inner, name, keep_args));
        }
        rest = if end < after.len() { &after[end + 1..] } else { "" };
    }
    out.push_str(rest);
    out
}

/// Identifier, number, string and operator tokens of normalized text.
pub fn tokens(s: &str) -> Vec<String> {
    let chars: Vec<char> = s.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let start = i;
        if is_ident_char(c) {
            while i < chars.len() && (is_ident_char(chars[i]) || chars[i] == '.') {
                i += 1;
            }
        } else if c == '"' {
            i += 1;
            while i < chars.len() && chars[i] != '"' {
                i += 1;
            }
            i = (i + 1).min(chars.len());
        } else {
            i += 1;
            let two: String = chars[start..(start + 2).min(chars.len())].iter().collect();
            if ["==", "!=", "<=", ">=", "//", "**"].contains(&two.as_str()) {
                i += 1;
            }
        }
        out.push(chars[start..i].iter().collect());
    }
    out
}

/// The leading keyword of a statement, or `assign` / `expr`.
pub fn statement_kind(s: &str) -> &'static str {
    for kw in ["if", "elif", "while", "for", "return", "continue", "break", "global", "def"] {
        if s == kw || (s.starts_with(kw) && !s[kw.len()..].starts_with(is_ident_char)) {
            return match kw {
                "if" => "if",
                "elif" => "elif",
                "while" => "while",
                "for" => "for",
                "return" => "return",
                "continue" => "continue",
                "break" => "break",
                "global" => "global",
                _ => "def",
            };
        }
    }
    if assignment_target(s).is_some() {
        "assign"
    } else {
        "expr"
    }
}

/// Left-hand side of a plain assignment in normalized text.
pub fn assignment_target(s: &str) -> Option<&str> {
    let mut depth = 0i32;
    let mut in_str = false;
    let bytes = s.as_bytes();
    for (i, c) in s.char_indices() {
        if c == '"' {
            in_str = !in_str;
        }
        if in_str {
            continue;
        }
        match c {
            '(' | '[' | '{' => depth += 1,
            ')' | ']' | '}' => depth -= 1,
            '=' if depth == 0 => {
                let next = bytes.get(i + 1).copied();
                let prev = if i > 0 { bytes[i - 1] } else { b' ' };
                if next == Some(b'=') || matches!(prev, b'=' | b'!' | b'<' | b'>') {
                    return None;
                }
                return Some(&s[..i]);
            }
            _ => {}
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn augmented_and_spacing() {
        assert_eq!(normalize("    var8 -= 1"), normalize("var8 = var8 - 1"));
        assert_eq!(normalize("x //= a + b").unwrap(), "x=x//(a+b)");
        assert_eq!(normalize("if a == 'x y':  # note").unwrap(), "if a==\"x y\":");
        assert_eq!(normalize("return  not  x").unwrap(), "return not x");
        assert_eq!(normalize("   # only"), None);
        assert_eq!(normalize("else:"), None);
    }

    #[test]
    fn call_removal() {
        assert_eq!(remove_call("a=ord(b[i])+ord(c)", "ord", true), "a=b[i]+c");
        assert_eq!(remove_call("a=chord(x)", "ord", true), "a=chord(x)");
        assert_eq!(remove_call("w=s.split()", ".split", false), "w=s");
        assert_eq!(remove_call("q=_idiv(_idiv(a,b),c)", "_idiv", true), "q=a,b,c");
    }

    #[test]
    fn kinds_and_targets() {
        assert_eq!(statement_kind("if x>1:"), "if");
        assert_eq!(statement_kind("iffy=3"), "assign");
        assert_eq!(assignment_target("var9=var7"), Some("var9"));
        assert_eq!(assignment_target("f(a==b)"), None);
        assert_eq!(tokens("x=x//(a+b)"), ["x", "=", "x", "//", "(", "a", "+", "b", ")"]);
    }

    #[test]
    fn functions_are_tracked() {
        let ls = lines("x = 1\n\ndef f(a):\n    return a\n\ndef g():\n    pass\n");
        let funcs: Vec<Option<&str>> = ls.iter().map(|l| l.func.as_deref()).collect();
        assert_eq!(funcs, [None, Some("f"), Some("f"), Some("g")]);
    }
}
