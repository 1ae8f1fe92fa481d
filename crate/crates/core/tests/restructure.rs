mod support;

use cityplan_core::restructure::{
    entry_summary, modification_marks, read_changelog_export, replay, write_changelog_export, Mark,
    ModificationMark,
};
use cityplan_core::testkit::*;
use cityplan_core::{ChangeError, ChangeOp, ChangelogEntry, EntityId, PlanState};

fn fresh() -> PlanState {
    PlanState::new(shop_landscape()).expect("shop base is valid")
}

fn apply(state: &mut PlanState, op: ChangeOp) {
    state.apply_change(op, "alice").expect("op accepted");
}

fn create_class(parent: &str, name: &str) -> ChangeOp {
    ChangeOp::CreateClass {
        parent_package_id: id(parent),
        name: name.into(),
    }
}

fn rename(entity: &str, name: &str) -> ChangeOp {
    ChangeOp::RenameEntity {
        entity_id: id(entity),
        new_name: name.into(),
    }
}

fn moved(entity: &str, parent: &str) -> ChangeOp {
    ChangeOp::MoveEntity {
        entity_id: id(entity),
        new_parent_id: id(parent),
    }
}

fn delete(entity: &str) -> ChangeOp {
    ChangeOp::DeleteEntity { entity_id: id(entity) }
}

fn communicate(source: &str, target: &str, method: &str) -> ChangeOp {
    ChangeOp::CreateCommunication {
        source_class_id: id(source),
        target_class_id: id(target),
        method_name: method.into(),
    }
}

fn cut(link: &str) -> ChangeOp {
    ChangeOp::CutCommunication { link_id: id(link) }
}

fn ops(state: &PlanState) -> Vec<ChangeOp> {
    state.entries().iter().map(|e| e.op.clone()).collect()
}

fn assert_replays(state: &PlanState) {
    let replayed = replay(state.base(), state.entries()).expect("ledger replays");
    assert_eq!(replayed.canonical_json(), state.model().canonical_json());
}

#[test]
fn create_class_gets_first_created_id_and_plus() {
    let mut state = fresh();
    let outcome = state.apply_change(create_class(ORG_SHOP, "Invoice"), "alice").unwrap();
    assert_eq!(state.entries().len(), 1);
    assert_eq!(state.entries()[0].created_entity_id, Some(id("new-1")));
    assert_eq!(outcome.added.len(), 1);
    assert_eq!(
        modification_marks(&state),
        vec![ModificationMark {
            entity_id: id("new-1"),
            mark: Mark::Created
        }]
    );
}

#[test]
fn r1_rename_after_create_mutates_the_create() {
    let mut state = fresh();
    apply(&mut state, create_class(ORG_SHOP, "Invoice"));
    let outcome = state.apply_change(rename("new-1", "Billing"), "bob").unwrap();
    assert_eq!(state.entries().len(), 1);
    assert_eq!(ops(&state), vec![create_class(ORG_SHOP, "Billing")]);
    assert_eq!(state.entries()[0].id, 1);
    assert_eq!(outcome.removed, vec![1]);
    assert_eq!(outcome.added[0].id, 1);
    assert_eq!(state.model().node(&id("new-1")).unwrap().name, "Billing");
    assert_replays(&state);
}

#[test]
fn r2_rename_after_rename_replaces_the_earlier_rename() {
    let mut state = fresh();
    apply(&mut state, rename(CART, "Basket"));
    apply(&mut state, rename(CART, "Trolley"));
    assert_eq!(ops(&state), vec![rename(CART, "Trolley")]);
    assert_eq!(state.entries()[0].id, 2);
    assert_replays(&state);

    apply(&mut state, rename(CART, "Cart"));
    assert!(state.entries().is_empty());
    assert!(modification_marks(&state).is_empty());
    assert_eq!(state.next_entry_id(), 3);
}

#[test]
fn r3_move_after_create_mutates_the_create_parent() {
    let mut state = fresh();
    apply(&mut state, create_class(ORG_SHOP, "Invoice"));
    apply(&mut state, moved("new-1", UTIL));
    assert_eq!(ops(&state), vec![create_class(UTIL, "Invoice")]);
    assert_eq!(state.model().fqn(&id("new-1")), "shop/org.shop.util.Invoice");
    assert_replays(&state);
}

#[test]
fn r4_move_after_move_replaces_the_earlier_move() {
    let mut state = fresh();
    apply(&mut state, moved(HELPER, ORG_SHOP));
    apply(&mut state, moved(HELPER, PAY_PKG));
    assert_eq!(ops(&state), vec![moved(HELPER, PAY_PKG)]);
    assert_replays(&state);

    apply(&mut state, moved(HELPER, UTIL));
    assert!(state.entries().is_empty());
}

#[test]
fn r5_delete_of_created_leaves_zero_entries() {
    let mut state = fresh();
    apply(&mut state, create_class(ORG_SHOP, "Invoice"));
    apply(&mut state, communicate("new-1", CART, "bill"));
    apply(&mut state, communicate(ORDER, "new-1", "invoice"));
    apply(&mut state, rename("new-1", "Billing"));
    assert_eq!(state.entries().len(), 3);
    apply(&mut state, delete("new-1"));
    assert!(state.entries().is_empty());
    assert!(!state.model().contains(&id("new-1")));
    assert_eq!(state.model().links().count(), 2);
    assert!(modification_marks(&state).is_empty());
}

#[test]
fn r5_covers_descendants_of_a_created_package() {
    let mut state = fresh();
    apply(
        &mut state,
        ChangeOp::CreatePackage {
            parent_id: id(ORG_SHOP),
            name: "billing".into(),
        },
    );
    apply(&mut state, create_class("new-1", "Invoice"));
    apply(&mut state, communicate("new-2", LEDGER, "pay"));
    apply(&mut state, delete("new-1"));
    assert!(state.entries().is_empty());
}

#[test]
fn r6_delete_of_original_with_one_link_leaves_two_grouped_entries() {
    let mut state = fresh();
    let outcome = state.apply_change(delete(CART), "alice").unwrap();
    assert_eq!(
        state.entries(),
        &[
            ChangelogEntry {
                id: 1,
                op: cut(CART_ORDER_LINK),
                author: "alice".into(),
                group_id: Some(2),
                created_entity_id: None,
            },
            ChangelogEntry {
                id: 2,
                op: delete(CART),
                author: "alice".into(),
                group_id: Some(2),
                created_entity_id: None,
            },
        ]
    );
    assert_eq!(outcome.added.len(), 2);
    let model = state.model();
    assert!(model.node(&id(CART)).unwrap().deleted);
    assert_eq!(model.mark_of(&id(CART)), Some(Mark::Deleted));
    assert_eq!(model.mark_of(&id(CART_ORDER_LINK)), Some(Mark::LinkCut));
    assert!(!model.is_deleted(&id(ORDER_LEDGER_LINK)));
    assert_replays(&state);
}

#[test]
fn r6_companions_are_ordered_by_link_fqn() {
    let mut state = fresh();
    apply(&mut state, delete(ORG_SHOP));
    let kinds: Vec<_> = ops(&state);
    assert_eq!(
        kinds,
        vec![cut(CART_ORDER_LINK), cut(ORDER_LEDGER_LINK), delete(ORG_SHOP)]
    );
    assert!(state.entries().iter().all(|e| e.group_id == Some(3)));
    for member in [ORG_SHOP, CART, ORDER, UTIL, HELPER] {
        assert_eq!(state.model().mark_of(&id(member)), Some(Mark::Deleted), "{member}");
    }
}

#[test]
fn r7_cut_of_created_communication_removes_its_create() {
    let mut state = fresh();
    apply(&mut state, communicate(CART, LEDGER, "pay"));
    assert_eq!(state.entries().len(), 1);
    apply(&mut state, cut("new-1"));
    assert!(state.entries().is_empty());
    assert!(!state.model().contains(&id("new-1")));
}

#[test]
fn rename_of_deleted_entity_is_rejected() {
    let mut state = fresh();
    apply(&mut state, delete(CART));
    let before = state.clone();
    let err = state.apply_change(rename(CART, "Basket"), "bob").unwrap_err();
    assert_eq!(err, ChangeError::EntityDeleted(id(CART)));
    assert_eq!(state, before);
}

#[test]
fn precondition_errors() {
    let state = fresh();
    let cases = [
        (rename("base-nope", "X"), "UnknownEntity"),
        (rename(CART, "Order"), "DuplicateName"),
        (create_class(ORG_SHOP, "util"), "DuplicateName"),
        (moved(ORG, UTIL), "CyclicMove"),
        (moved(ORG_SHOP, ORG_SHOP), "CyclicMove"),
        (communicate(CART, CART, "x"), "SelfCommunication"),
        (create_class(SHOP_APP, "Top"), "InvalidTarget"),
        (moved(CART, SHOP_APP), "InvalidTarget"),
        (cut(CART), "InvalidTarget"),
        (rename(CART, "a.b"), "InvalidName"),
    ];
    for (op, kind) in cases {
        let mut probe = state.clone();
        let err = probe.apply_change(op.clone(), "alice").unwrap_err();
        assert_eq!(err.kind(), kind, "{op:?}");
        assert_eq!(probe, state);
    }
}

#[test]
fn replay_of_empty_ledger_is_base() {
    let model = replay(&shop_landscape(), &[]).unwrap();
    assert!(model.marks().is_empty());
    assert_eq!(model.to_landscape(), shop_landscape());
}

#[test]
fn replay_of_three_step_example_keeps_marked_cart() {
    let mut state = fresh();
    apply(&mut state, create_class(ORG_SHOP, "Invoice"));
    apply(&mut state, rename("new-1", "Billing"));
    apply(&mut state, delete(CART));
    let model = replay(state.base(), state.entries()).unwrap();
    assert_eq!(model.node(&id("new-1")).unwrap().name, "Billing");
    assert!(model.node(&id(CART)).unwrap().deleted);
    assert_eq!(model.mark_of(&id(CART)), Some(Mark::Deleted));
    assert_eq!(model.mark_of(&id("new-1")), Some(Mark::Created));
}

#[test]
fn swapped_dependent_entries_are_a_corrupt_ledger() {
    let mut state = fresh();
    apply(&mut state, create_class(ORG_SHOP, "Invoice"));
    apply(&mut state, communicate("new-1", CART, "bill"));
    let mut tampered = state.entries().to_vec();
    tampered.swap(0, 1);
    let err = replay(state.base(), &tampered).unwrap_err();
    assert!(matches!(err, ChangeError::CorruptLedger { .. }), "{err:?}");

    // ids must increase even if ops would still apply
    let mut reordered = fresh();
    apply(&mut reordered, rename(CART, "Basket"));
    apply(&mut reordered, rename(ORDER, "Purchase"));
    let mut swapped = reordered.entries().to_vec();
    swapped.swap(0, 1);
    assert_eq!(replay(reordered.base(), &swapped).unwrap_err().kind(), "CorruptLedger");
}

#[test]
fn undo_only_entry_restores_fresh_state() {
    let mut state = fresh();
    apply(&mut state, rename(CART, "Basket"));
    state.undo_entry(1).unwrap();
    assert_eq!(state.model(), fresh().model());
    assert!(state.entries().is_empty());
}

#[test]
fn undo_create_used_as_endpoint_removes_both() {
    let mut state = fresh();
    apply(&mut state, create_class(ORG_SHOP, "Invoice"));
    apply(&mut state, communicate(CART, "new-1", "bill"));
    apply(&mut state, rename(ORDER, "Purchase"));
    let outcome = state.undo_entry(1).unwrap();
    assert_eq!(outcome.removed, vec![1, 2]);
    assert_eq!(ops(&state), vec![rename(ORDER, "Purchase")]);
    assert_eq!(state.entries()[0].id, 3);
}

#[test]
fn undo_delete_restores_its_companions() {
    let mut state = fresh();
    apply(&mut state, delete(CART));
    assert!(state.model().is_deleted(&id(CART_ORDER_LINK)));
    let outcome = state.undo_entry(2).unwrap();
    assert_eq!(outcome.removed, vec![1, 2]);
    assert!(state.entries().is_empty());
    assert!(!state.model().is_deleted(&id(CART_ORDER_LINK)));

    let mut state = fresh();
    apply(&mut state, delete(CART));
    state.undo_entry(1).unwrap();
    assert!(state.entries().is_empty(), "undoing a companion undoes its group");
}

#[test]
fn undo_prunes_entries_that_no_longer_apply() {
    let mut state = fresh();
    apply(
        &mut state,
        ChangeOp::CreatePackage {
            parent_id: id(ORG_SHOP),
            name: "billing".into(),
        },
    );
    apply(&mut state, moved(ORDER, "new-1"));
    // Order now lives in the created package; undoing the package makes the
    // move target vanish.
    state.undo_entry(1).unwrap();
    assert!(state.entries().is_empty());
}

#[test]
fn undo_unknown_entry() {
    let mut state = fresh();
    assert_eq!(state.undo_entry(9).unwrap_err(), ChangeError::UnknownEntry(9));
}

#[test]
fn moved_then_renamed_original_has_single_arrow_mark() {
    let mut state = fresh();
    apply(&mut state, moved(CART, UTIL));
    apply(&mut state, rename(CART, "Basket"));
    assert_eq!(
        modification_marks(&state),
        vec![ModificationMark {
            entity_id: id(CART),
            mark: Mark::Moved
        }]
    );
    let mut state = fresh();
    apply(&mut state, rename(CART, "Basket"));
    apply(&mut state, moved(CART, UTIL));
    assert_eq!(state.model().mark_of(&id(CART)), Some(Mark::Moved));
}

#[test]
fn deleted_beats_every_other_mark() {
    let mut state = fresh();
    apply(&mut state, rename(CART, "Basket"));
    apply(&mut state, moved(CART, UTIL));
    apply(&mut state, delete(CART));
    assert_eq!(state.model().mark_of(&id(CART)), Some(Mark::Deleted));
    assert_eq!(modification_marks(&state).len(), 2);
}

#[test]
fn fresh_state_has_no_marks() {
    assert!(modification_marks(&fresh()).is_empty());
}

fn summary_scenario() -> PlanState {
    let mut state = fresh();
    apply(&mut state, create_class(ORG_SHOP, "Invoice"));
    apply(&mut state, rename("new-1", "Billing"));
    apply(&mut state, rename(CART, "Basket"));
    apply(
        &mut state,
        ChangeOp::CreatePackage {
            parent_id: id(ORG_SHOP),
            name: "billing".into(),
        },
    );
    apply(&mut state, moved(ORDER, "new-2"));
    apply(&mut state, delete(UTIL));
    apply(&mut state, communicate(CART, LEDGER, "settle"));
    apply(&mut state, cut(ORDER_LEDGER_LINK));
    apply(&mut state, rename(SHOP_APP, "webshop"));
    apply(
        &mut state,
        ChangeOp::CreateApplication {
            name: "billing".into(),
            language: "kotlin".into(),
        },
    );
    apply(&mut state, delete(LEDGER));
    state
}

#[test]
fn summaries_match_golden() {
    let state = summary_scenario();
    let lines: Vec<String> = state
        .entries()
        .iter()
        .map(|e| format!("{} {}", e.id, entry_summary(e, state.model()).unwrap()))
        .collect();
    let actual = lines.join("\n") + "\n";
    let golden = include_str!("golden/summaries.txt");
    assert_eq!(actual, golden);
}

#[test]
fn summary_for_unknown_entry_errors() {
    let state = fresh();
    let stray = ChangelogEntry {
        id: 5,
        op: rename(CART, "Basket"),
        author: "alice".into(),
        group_id: None,
        created_entity_id: None,
    };
    assert_eq!(
        entry_summary(&stray, state.model()).unwrap_err(),
        ChangeError::UnknownEntity(EntityId::from(CART))
    );
}

#[test]
fn changelog_export_round_trips() {
    let state = summary_scenario();
    let exported = state.changelog_export().unwrap();
    let text = write_changelog_export(&exported);
    assert!(text.starts_with("{\n  \"version\": 1,"));
    assert_eq!(read_changelog_export(text.as_bytes()).unwrap(), exported);
}
