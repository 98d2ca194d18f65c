//! Compiles and runs a C program against the generated header and the
//! static library.

use std::path::PathBuf;
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "dsembed.h"

int main(void) {
    const char *text = "red green blue red green blue sky sea sky sea red sky";
    DseCorpus *corpus = NULL;
    if (dse_corpus_from_text(text, 100, 2, true, &corpus) != DSE_STATUS_OK) return 1;
    DseTrainOptions opts = dse_train_options_default();
    opts.rank = 2;
    DseModel *model = NULL;
    if (dse_train(corpus, &opts, &model, NULL) != DSE_STATUS_OK) return 2;
    size_t ids[3];
    double scores[3];
    size_t count = 0;
    if (dse_model_knn(model, "red", 3, ids, scores, &count) != DSE_STATUS_OK) return 3;
    if (count != 3) return 4;
    if (dse_model_knn(model, "purple", 3, ids, scores, &count) != DSE_STATUS_LOOKUP) return 5;
    if (strstr(dse_last_error(), "purple") == NULL) return 6;
    printf("%s %zu\n", dse_model_word(model, ids[0]), dse_model_size(model));
    dse_model_free(model);
    dse_corpus_free(corpus);
    return 0;
}
"#;

#[test]
fn c_program_links_and_runs() {
    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    // tests run from target/<profile>/deps
    let exe = std::env::current_exe().unwrap();
    let lib_dir = exe.parent().unwrap().parent().unwrap().to_path_buf();
    let lib = lib_dir.join("libdsembed_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");

    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(&src, PROGRAM).unwrap();
    let bin = dir.path().join("demo");
    let status = Command::new(&cc)
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(&include)
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C compilation failed");
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "demo exited with {:?}", out.status.code());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.ends_with(" 5\n"), "{stdout}");
}

fn which_cc() -> Result<String, ()> {
    for cand in ["cc", "gcc", "clang"] {
        if Command::new(cand).arg("--version").output().is_ok() {
            return Ok(cand.to_string());
        }
    }
    Err(())
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/dsembed.h")).unwrap();
    let lib = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/src/lib.rs")).unwrap();
    let exports: Vec<&str> = lib
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 15, "{exports:?}");
    for name in exports {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
    assert!(header.contains("typedef struct DseModel DseModel;"));
    assert!(header.contains("DSE_STATUS_LOOKUP = 5"));
}
