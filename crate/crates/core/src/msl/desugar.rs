use super::{Aggregation, MessageStructure, Substructure};

/// Make the implicit structure explicit.
///
/// Anonymous complex substructures are named `<parent>_<position>` (1-based
/// among siblings); iteration bodies and specialisation variants that are
/// not aggregations are wrapped in one. Applying it twice changes nothing.
pub fn desugar(ms: &MessageStructure) -> MessageStructure {
    let mut root = ms.root.clone();
    if root.name().is_none() {
        set_name(&mut root, ms.name.clone());
    }
    expand(&mut root);
    MessageStructure {
        name: ms.name.clone(),
        root,
        loc: ms.loc.clone(),
    }
}

fn set_name(node: &mut Substructure, name: String) {
    match node {
        Substructure::Aggregation(a) => a.name = Some(name),
        Substructure::Iteration(i) => i.name = Some(name),
        Substructure::Specialisation(s) => s.name = Some(name),
        Substructure::Field(_) => {}
    }
}

/// Ensure `node` is a named aggregation, wrapping it if needed.
fn as_aggregation(node: &mut Substructure, synthesized: String) {
    match node {
        Substructure::Aggregation(a) => {
            if a.name.is_none() {
                a.name = Some(synthesized);
            }
        }
        other => {
            let inner = std::mem::replace(
                other,
                Substructure::Aggregation(Aggregation {
                    name: Some(synthesized),
                    children: Vec::new(),
                    loc: other.loc().clone(),
                }),
            );
            if let Substructure::Aggregation(a) = other {
                a.children.push(inner);
            }
        }
    }
}

/// `node` is already named; name and expand its descendants.
fn expand(node: &mut Substructure) {
    let parent = node.name().unwrap_or_default().to_string();
    match node {
        Substructure::Field(_) => {}
        Substructure::Aggregation(a) => {
            for (i, child) in a.children.iter_mut().enumerate() {
                if child.is_complex() && child.name().is_none() {
                    set_name(child, format!("{parent}_{}", i + 1));
                }
                expand(child);
            }
        }
        Substructure::Iteration(it) => {
            as_aggregation(&mut it.body, format!("{parent}_1"));
            expand(&mut it.body);
        }
        Substructure::Specialisation(s) => {
            for (i, variant) in s.variants.iter_mut().enumerate() {
                as_aggregation(variant, format!("{parent}_{}", i + 1));
                expand(variant);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::msl::{parse_message_structure, serialize};

    #[test]
    fn iteration_body_gets_implicit_aggregation() {
        let ms = parse_message_structure("X = < k + { a + b } >").unwrap();
        let d = desugar(&ms);
        let expected = parse_message_structure("X = < k + X_2 = { X_2_1 = < a + b > } >").unwrap();
        assert!(d.same_structure(&expected), "{}", serialize(&d));
    }

    #[test]
    fn variants_wrapped() {
        let ms = parse_message_structure("A = < T = [ a + b | c ] >").unwrap();
        let d = desugar(&ms);
        let expected = parse_message_structure("A = < T = [ T_1 = < a + b > | T_2 = < c > ] >").unwrap();
        assert!(d.same_structure(&expected), "{}", serialize(&d));
    }

    #[test]
    fn single_field_iteration_body() {
        let ms = parse_message_structure("L = { item }").unwrap();
        let d = desugar(&ms);
        let expected = parse_message_structure("L = { L_1 = < item > }").unwrap();
        assert!(d.same_structure(&expected));
    }

    #[test]
    fn idempotent_on_nested_sugar() {
        let ms = parse_message_structure("A = { [ x | { y + [ z ] } ] + w }").unwrap();
        let once = desugar(&ms);
        assert_eq!(desugar(&once), once);
    }
}
