use super::{EventVariant, ModelRepository};

/// `SALE` + 1 → `SALE 1`.
pub fn event_id(acronym: &str, number: u32) -> String {
    format!("{acronym} {number}")
}

/// `SALE 3` + 1 → `SALE 3.1`; applies recursively for nested variants.
pub fn variant_id(parent_id: &str, number: u32) -> String {
    format!("{parent_id}.{number}")
}

fn assign_variants(parent: &str, variants: &mut [EventVariant]) {
    for v in variants {
        v.id = variant_id(parent, v.number);
        let id = v.id.clone();
        assign_variants(&id, &mut v.variants);
    }
}

/// Recompute every event and variant identifier from process acronyms and
/// numbers.
pub fn assign_identifiers(repo: &mut ModelRepository) {
    for e in &mut repo.events {
        e.id = event_id(&e.process, e.number);
        let id = e.id.clone();
        assign_variants(&id, &mut e.variants);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identifier_shapes() {
        assert_eq!(event_id("SALE", 1), "SALE 1");
        assert_eq!(variant_id(&event_id("SALE", 3), 1), "SALE 3.1");
        assert_eq!(variant_id("ALIE 5.2", 2), "ALIE 5.2.2");
    }
}
