use cityplan_core::restructure::ExportedEntry;
use cityplan_core::testkit::*;
use cityplan_core::{ChangeOp, PlanState};
use cityplan_issue::{dry_run, render_markdown, IssueDraft, IssueError, MockTransport, Screenshot};

fn changelog() -> Vec<ExportedEntry> {
    let mut state = PlanState::new(shop_landscape()).unwrap();
    let ops = [
        ChangeOp::CreateClass {
            parent_package_id: id(ORG_SHOP),
            name: "Invoice".into(),
        },
        ChangeOp::RenameEntity {
            entity_id: id("new-1"),
            new_name: "Billing".into(),
        },
        ChangeOp::RenameEntity {
            entity_id: id(CART),
            new_name: "Basket".into(),
        },
        ChangeOp::DeleteEntity { entity_id: id(ORDER) },
        ChangeOp::CreateCommunication {
            source_class_id: id(CART),
            target_class_id: id(LEDGER),
            method_name: "settle".into(),
        },
    ];
    for op in ops {
        state.apply_change(op, "alice").unwrap();
    }
    let export = state.changelog_export().unwrap();
    assert_eq!(export.iter().map(|e| e.id).collect::<Vec<_>>(), vec![1, 2, 3, 4, 5, 6]);
    export
}

fn shot(name: &str) -> Screenshot {
    Screenshot {
        file_name: name.into(),
        data: vec![0x89, b'P', b'N', b'G', 1, 2, 3],
    }
}

fn drafts() -> Vec<(&'static str, IssueDraft)> {
    vec![
        (
            "01-single-create-mention",
            IssueDraft {
                title: "Introduce billing".into(),
                selected_entry_ids: vec![1],
                mentions: vec!["alice".into()],
                ..Default::default()
            },
        ),
        (
            "02-out-of-order-selection",
            IssueDraft {
                title: "Rename and remove".into(),
                selected_entry_ids: vec![5, 2],
                ..Default::default()
            },
        ),
        (
            "03-delete-group-with-notes",
            IssueDraft {
                title: "Drop Order".into(),
                selected_entry_ids: vec![3, 4, 5],
                comment: Some("Order is folded into Billing.\nSee the sketch below.\n".into()),
                ..Default::default()
            },
        ),
        (
            "04-screenshots",
            IssueDraft {
                title: "Billing links".into(),
                selected_entry_ids: vec![1, 6],
                screenshots: vec![shot("city.png"), shot("detail.png")],
                mentions: vec!["bob".into()],
                ..Default::default()
            },
        ),
        (
            "05-everything",
            IssueDraft {
                title: "  Split Cart  ".into(),
                selected_entry_ids: vec![6, 2, 1, 5, 2],
                comment: Some("Plan from the Tuesday session.".into()),
                screenshots: vec![shot("overview.png")],
                mentions: vec!["alice".into(), "bob".into(), "dev.ops-team".into(), "alice".into()],
            },
        ),
    ]
}

#[test]
fn rendered_drafts_match_goldens() {
    let changelog = changelog();
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    for (name, draft) in drafts() {
        let rendered = render_markdown(&draft, &changelog).unwrap().to_document();
        let path = dir.join(format!("{name}.md"));
        if std::env::var_os("UPDATE_GOLDEN").is_some() {
            std::fs::write(&path, &rendered).unwrap();
        }
        let golden = std::fs::read_to_string(&path).unwrap();
        assert_eq!(rendered, golden, "{name}");
    }
}

#[test]
fn single_create_body() {
    let rendered = render_markdown(&drafts()[0].1, &changelog()).unwrap();
    assert!(rendered.body.contains("- Created class `Billing` in `shop/org.shop`"));
    assert!(rendered.body.ends_with("/cc @alice"));
    assert!(rendered.body.starts_with("## Planned changes\n\n"));
}

#[test]
fn bullets_follow_id_order() {
    let rendered = render_markdown(&drafts()[1].1, &changelog()).unwrap();
    let two = rendered.body.find("Renamed class `Cart` to `Basket`").unwrap();
    let five = rendered.body.find("Deleted class `shop/org.shop.Order`").unwrap();
    assert!(two < five);
}

#[test]
fn draft_errors() {
    let changelog = changelog();
    let base = drafts()[0].1.clone();
    let cases = [
        (IssueDraft { selected_entry_ids: vec![], ..base.clone() }, "EmptySelection"),
        (IssueDraft { selected_entry_ids: vec![1, 42], ..base.clone() }, "UnknownEntry"),
        (IssueDraft { title: "   ".into(), ..base.clone() }, "InvalidDraft"),
        (IssueDraft { title: "two\nlines".into(), ..base.clone() }, "InvalidDraft"),
        (IssueDraft { mentions: vec!["@alice".into()], ..base.clone() }, "InvalidMention"),
        (IssueDraft { mentions: vec!["a b".into()], ..base.clone() }, "InvalidMention"),
        (IssueDraft { screenshots: vec![shot("a.png"), shot("a.png")], ..base.clone() }, "InvalidDraft"),
        (IssueDraft { screenshots: vec![shot("../x.png")], ..base.clone() }, "InvalidDraft"),
    ];
    for (draft, kind) in cases {
        assert_eq!(render_markdown(&draft, &changelog).unwrap_err().kind(), kind, "{draft:?}");
    }
    assert_eq!(
        render_markdown(&IssueDraft { selected_entry_ids: vec![42], ..base }, &changelog).unwrap_err(),
        IssueError::UnknownEntry(42)
    );
}

#[test]
fn dry_run_writes_title_then_body_without_network() {
    let changelog = changelog();
    let dir = tempfile::tempdir().unwrap();
    let transport = MockTransport::new(vec![]);
    let draft = &drafts()[4].1;
    let a = dir.path().join("a.md");
    let b = dir.path().join("b.md");
    let issue = dry_run(draft, &changelog, &a).unwrap();
    dry_run(draft, &changelog, &b).unwrap();
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text.lines().next(), Some("Split Cart"));
    assert_eq!(text, format!("{}\n\n{}", issue.title, issue.body));
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert!(transport.requests().is_empty());

    let err = dry_run(draft, &changelog, &dir.path().join("missing/dir/x.md")).unwrap_err();
    assert_eq!(err.kind(), "IoError");
}

#[test]
fn draft_documents_round_trip_with_base64_screenshots() {
    let draft = drafts()[3].1.clone();
    let text = serde_json::to_string(&draft).unwrap();
    assert!(text.contains("\"selectedEntryIds\":[1,6]"));
    assert!(text.contains("\"data\":\"iVBORwECAw==\""));
    let back: IssueDraft = serde_json::from_str(&text).unwrap();
    assert_eq!(back, draft);
    assert!(serde_json::from_str::<IssueDraft>(r#"{"title":"t","selectedEntryIds":[1],"bogus":1}"#).is_err());
}

#[test]
fn checked_in_draft_documents_are_current() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let mut files = vec![(
        "shop.changelog.json".to_owned(),
        cityplan_core::restructure::write_changelog_export(&changelog()),
    )];
    for (name, draft) in drafts() {
        let mut text = serde_json::to_string_pretty(&draft).unwrap();
        text.push('\n');
        files.push((format!("{name}.draft.json"), text));
    }
    for (file, expected) in files {
        let path = dir.join(&file);
        if std::env::var_os("UPDATE_GOLDEN").is_some() {
            std::fs::write(&path, &expected).unwrap();
        }
        assert_eq!(std::fs::read_to_string(&path).unwrap(), expected, "{file}");
    }
}
