use std::fmt::Write;

use super::{Field, FieldProperties, MessageStructure, Substructure};

/// Canonical text: two-space indentation, one substructure per line, then
/// one `field` block per field carrying extended properties. A structure
/// holding a single field prints on one line.
pub fn serialize(ms: &MessageStructure) -> String {
    let mut out = String::new();
    match &ms.root {
        Substructure::Aggregation(a)
            if a.children.len() == 1
                && matches!(a.children[0], Substructure::Field(_))
                && a.name.as_deref().is_none_or(|n| n == ms.name) =>
        {
            let Substructure::Field(f) = &a.children[0] else { unreachable!() };
            let _ = writeln!(out, "{} = < {} >", ms.name, field_text(f));
        }
        root => {
            let _ = write!(out, "{} = ", ms.name);
            write_complex(&mut out, root, 0);
            out.push('\n');
        }
    }

    let fields = ms.fields();
    for (path, field) in &fields {
        if !field.props.has_extended() {
            continue;
        }
        let unique = fields.iter().filter(|(_, f)| f.name == field.name).count() == 1;
        let reference = if unique { field.name.clone() } else { path.to_string() };
        let _ = writeln!(out, "field {reference} {{");
        write_properties(&mut out, &field.props);
        out.push_str("}\n");
    }
    out
}

fn quote(s: &str) -> String {
    let mut q = String::with_capacity(s.len() + 2);
    q.push('"');
    for c in s.chars() {
        match c {
            '"' => q.push_str("\\\""),
            '\\' => q.push_str("\\\\"),
            '\n' => q.push_str("\\n"),
            c => q.push(c),
        }
    }
    q.push('"');
    q
}

fn field_text(f: &Field) -> String {
    let mut s = format!("{}:{}:{}", f.name, f.props.op, f.props.domain);
    if let Some(example) = &f.props.example {
        s.push(' ');
        s.push_str(&quote(example));
    }
    s
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

/// Writes `node` starting at the current column; closing bracket at `level`.
fn write_complex(out: &mut String, node: &Substructure, level: usize) {
    let (open, close, groups): (char, char, Vec<&[Substructure]>) = match node {
        Substructure::Aggregation(a) => ('<', '>', vec![a.children.as_slice()]),
        Substructure::Iteration(i) => ('{', '}', vec![std::slice::from_ref(i.body.as_ref())]),
        Substructure::Specialisation(s) => ('[', ']', s.variants.iter().map(std::slice::from_ref).collect()),
        Substructure::Field(f) => {
            out.push_str(&field_text(f));
            return;
        }
    };
    out.push(open);
    out.push('\n');
    for (gi, group) in groups.iter().enumerate() {
        for (ci, child) in group.iter().enumerate() {
            indent(out, level + 1);
            write_item(out, child, level + 1);
            if ci + 1 < group.len() {
                out.push_str(" +");
            }
            if ci + 1 == group.len() && gi + 1 < groups.len() {
                out.push_str(" |");
            }
            out.push('\n');
        }
    }
    indent(out, level);
    out.push(close);
}

fn write_item(out: &mut String, node: &Substructure, level: usize) {
    if let (true, Some(name)) = (node.is_complex(), node.name()) {
        let _ = write!(out, "{name} = ");
    }
    write_complex(out, node, level);
}

fn write_properties(out: &mut String, p: &FieldProperties) {
    let mut line = |k: &str, v: String| {
        let _ = writeln!(out, "  {k}={v}");
    };
    if let Some(v) = &p.description {
        line("description", quote(v));
    }
    if let Some(v) = &p.label {
        line("label", quote(v));
    }
    if let Some(v) = &p.link_with_memory {
        line("link", quote(v));
    }
    if let Some(v) = p.mandatory {
        line("mandatory", v.to_string());
    }
    if let Some(v) = &p.init_formula {
        line("init", quote(v.text()));
    }
    if let Some(v) = p.visible {
        line("visible", v.to_string());
    }
    if let Some(v) = &p.derivation_formula {
        line("formula", quote(v.text()));
    }
}
