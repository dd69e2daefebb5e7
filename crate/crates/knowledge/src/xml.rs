//! Minimal indented XML writer and reader helpers.

pub use roxmltree::Node;

use crate::error::{KnowledgeError, Result};

pub fn escape(s: &str) -> String {
    let mut o = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => o.push_str("&amp;"),
            '<' => o.push_str("&lt;"),
            '>' => o.push_str("&gt;"),
            '"' => o.push_str("&quot;"),
            _ => o.push(c),
        }
    }
    o
}

/// Two-space indented element writer.
#[derive(Default)]
pub struct XmlWriter {
    out: String,
    depth: usize,
}

impl XmlWriter {
    pub fn new() -> XmlWriter {
        XmlWriter::default()
    }

    fn indent(&mut self) {
        for _ in 0..self.depth {
            self.out.push_str("  ");
        }
    }

    fn tag(name: &str, attrs: &[(&str, String)]) -> String {
        let mut t = name.to_string();
        for (k, v) in attrs {
            t.push_str(&format!(" {k}=\"{}\"", escape(v)));
        }
        t
    }

    pub fn open(&mut self, name: &str, attrs: &[(&str, String)]) {
        self.indent();
        self.out.push_str(&format!("<{}>\n", Self::tag(name, attrs)));
        self.depth += 1;
    }

    pub fn close(&mut self, name: &str) {
        self.depth -= 1;
        self.indent();
        self.out.push_str(&format!("</{name}>\n"));
    }

    pub fn leaf(&mut self, name: &str, text: &str) {
        self.indent();
        self.out.push_str(&format!("<{name}>{}</{name}>\n", escape(text)));
    }

    pub fn empty(&mut self, name: &str, attrs: &[(&str, String)]) {
        self.indent();
        self.out.push_str(&format!("<{} />\n", Self::tag(name, attrs)));
    }

    pub fn finish(self) -> String {
        self.out
    }
}

pub fn parse(text: &str) -> Result<roxmltree::Document<'_>> {
    roxmltree::Document::parse(text).map_err(|e| KnowledgeError::Xml(e.to_string()))
}

pub fn elements<'a, 'i>(n: Node<'a, 'i>) -> impl Iterator<Item = Node<'a, 'i>> {
    n.children().filter(|c| c.is_element())
}

pub fn name<'a>(n: Node<'a, '_>) -> &'a str {
    n.tag_name().name()
}

pub fn text<'a>(n: Node<'a, '_>) -> &'a str {
    n.text().unwrap_or("").trim()
}

pub fn child<'a, 'i>(n: Node<'a, 'i>, tag: &str) -> Result<Node<'a, 'i>> {
    elements(n).find(|c| name(*c) == tag).ok_or_else(|| KnowledgeError::Missing {
        parent: name(n).to_string(),
        child: tag.to_string(),
    })
}

pub fn number<T: std::str::FromStr>(n: Node<'_, '_>) -> Result<T> {
    text(n).parse().map_err(|_| KnowledgeError::BadNumber {
        element: name(n).to_string(),
        text: text(n).to_string(),
    })
}

pub fn numbers<T: std::str::FromStr>(n: Node<'_, '_>) -> Result<Vec<T>> {
    text(n)
        .split_whitespace()
        .map(|w| {
            w.parse().map_err(|_| KnowledgeError::BadNumber {
                element: name(n).to_string(),
                text: w.to_string(),
            })
        })
        .collect()
}

pub fn boolean(n: Node<'_, '_>) -> Result<bool> {
    parse_bool(text(n)).ok_or_else(|| KnowledgeError::Invalid(format!("boolean {:?} in <{}>", text(n), name(n))))
}

pub fn parse_bool(s: &str) -> Option<bool> {
    match s {
        "True" | "true" | "1" => Some(true),
        "False" | "false" | "0" => Some(false),
        _ => None,
    }
}

pub fn show_bool(b: bool) -> &'static str {
    if b {
        "True"
    } else {
        "False"
    }
}

pub fn join<T: std::fmt::Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}
