use super::LintContext;
use crate::ced::{CommunicativeEvent, Direction, ModelRepository};
use crate::diagnostic::{Code, Diagnostic};
use crate::msl::AcquisitionOp;

/// Unity criteria: trigger (U01), communication (U02) and the reaction
/// advisory (U03).
pub fn check_unity(repo: &ModelRepository) -> Vec<Diagnostic> {
    let mut out: Vec<Diagnostic> = repo.events.iter().flat_map(|e| check_event(repo, e)).collect();
    out.sort();
    out
}

pub(super) fn pass(cx: &LintContext<'_>) -> Vec<Diagnostic> {
    cx.exec.flat_map(&cx.repo.events, |e| check_event(cx.repo, e))
}

fn check_event(repo: &ModelRepository, e: &CommunicativeEvent) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    if e.primary_roles().is_empty() {
        out.push(
            Diagnostic::new(
                Code::U01,
                &e.loc,
                format!("{} has no primary role; some external actor must trigger the event", e.id),
            )
            .with_element(e.id.clone()),
        );
    }
    if let Some(problem) = communication_problem(repo, e) {
        out.push(Diagnostic::new(Code::U02, &e.loc, format!("{} {problem}", e.id)).with_element(e.id.clone()));
    }
    let has_outgoing = e.all_interactions().iter().any(|i| i.direction == Direction::Outgoing);
    let reaction_specified = repo.template_for(&e.id).is_some_and(|t| {
        let r = &t.reaction;
        r.data_view_ref.is_some()
            || !r.treatments.is_empty()
            || !r.linked_behaviours.is_empty()
            || !r.linked_communications.is_empty()
    });
    if !has_outgoing && !reaction_specified {
        out.push(
            Diagnostic::new(
                Code::U03,
                &e.loc,
                format!("{} has no outgoing interaction and no reaction requirements", e.id),
            )
            .with_element(e.id.clone()),
        );
    }
    out
}

fn communication_problem(repo: &ModelRepository, e: &CommunicativeEvent) -> Option<String> {
    let messages = e.ingoing_messages();
    if messages.is_empty() {
        return Some("has no ingoing message structure".into());
    }
    let mut inputs = 0;
    for m in &messages {
        match repo.structure(m) {
            None => return Some(format!("refers to undefined message structure `{m}`")),
            Some(ms) => {
                inputs += ms
                    .fields()
                    .iter()
                    .filter(|(_, f)| f.props.op == AcquisitionOp::Input)
                    .count()
            }
        }
    }
    (inputs == 0).then(|| "conveys no input (i) field, so it provides no new information".to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ced::{parse_model, SourceFile};

    fn codes(src: &str) -> Vec<Code> {
        let repo = parse_model(&[SourceFile::new("m.ced", src)]).unwrap();
        check_unity(&repo).into_iter().map(|d| d.code).collect()
    }

    const MSG: &str = "messages { M = < a:i:text > G = < a:g:number > }";

    #[test]
    fn complete_event_is_clean() {
        let src = format!("process A {{ event 1 \"a\" {{ primary X; in \"M\" message=M; out \"N\" to Y }} }} {MSG}");
        assert!(codes(&src).is_empty());
    }

    #[test]
    fn each_criterion() {
        let u01 = format!("process A {{ event 1 \"a\" {{ interface X; in \"M\" message=M; out \"N\" to Y }} }} {MSG}");
        assert_eq!(codes(&u01), [Code::U01]);
        let u02 = format!("process A {{ event 1 \"a\" {{ primary X; in \"G\" message=G; out \"N\" to Y }} }} {MSG}");
        assert_eq!(codes(&u02), [Code::U02]);
        let missing = format!("process A {{ event 1 \"a\" {{ primary X; in \"Q\" message=Q; out \"N\" to Y }} }} {MSG}");
        assert_eq!(codes(&missing), [Code::U02]);
        let u03 = format!("process A {{ event 1 \"a\" {{ primary X; in \"M\" message=M }} }} {MSG}");
        assert_eq!(codes(&u03), [Code::U03]);
    }

    #[test]
    fn reaction_in_template_satisfies_u03() {
        let ced = SourceFile::new(
            "m.ced",
            format!("process A {{ event 1 \"a\" {{ primary X; in \"M\" message=M }} }} {MSG}"),
        );
        let cet = SourceFile::new("a1.cet", "event \"A 1\"\n[reaction]\ntreatments:\n- The record is stored.\n");
        let repo = parse_model(&[ced, cet]).unwrap();
        assert!(check_unity(&repo).is_empty());
    }
}
