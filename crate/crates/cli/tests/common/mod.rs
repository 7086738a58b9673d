#![allow(dead_code)]

use std::path::Path;

use lakefind_core::ingest::{write_raw_table, RawTable};

pub const CITIES: [&str; 6] = ["Leeds", "York", "Hull", "Bradford", "Wakefield", "Harrogate"];

fn practice(i: usize) -> String {
    const FIRST: [&str; 10] = [
        "Oak", "Elm", "Ash", "Birch", "Cedar", "Maple", "Willow", "Rowan", "Hazel", "Holly",
    ];
    const SECOND: [&str; 5] = ["Lane", "Park", "Street", "Grove", "Road"];
    format!("{} {} Surgery", FIRST[i % 10], SECOND[i / 10 % 5])
}

fn postcode(i: usize) -> String {
    format!("LS{} {}AB", i % 17 + 1, i % 9 + 1)
}

fn hours(i: usize) -> String {
    format!("{:02}:00-{:02}:30", 7 + i % 3, 17 + i % 4)
}

fn table(header: &[&str], rows: Vec<Vec<String>>) -> RawTable {
    RawTable {
        header: header.iter().map(|s| s.to_string()).collect(),
        rows,
    }
}

/// Target: practices with their city, postcode and opening hours.
pub fn clinic_target() -> RawTable {
    table(
        &["Practice", "City", "Postcode", "Hours"],
        (0..40)
            .map(|i| vec![practice(i), CITIES[i % 6].into(), postcode(i), hours(i)])
            .collect(),
    )
}

/// S1 and S2 are unionable with the target minus its `Hours` column. S3
/// only shares the practice names (its subject) and carries the hours, so it
/// is reachable from S1/S2 by a join. The rest is unrelated.
pub fn clinic_lake() -> Vec<(String, RawTable)> {
    let s1 = table(
        &["Practice", "City", "Postcode"],
        (0..40)
            .map(|i| vec![practice(i), CITIES[i % 6].into(), postcode(i)])
            .collect(),
    );
    let s2 = s1.clone();
    let s3 = table(
        &["Practice", "Opening"],
        (0..40).map(|i| vec![practice(i), hours(i + 1)]).collect(),
    );
    let birds = table(
        &["Species", "Wingspan", "Habitat"],
        (0..30)
            .map(|i| vec![format!("bird-{i}"), format!("{}.5", 20 + i), format!("marsh {}", i % 4)])
            .collect(),
    );
    let trains = table(
        &["Service", "Departs", "Platform"],
        (0..30)
            .map(|i| {
                vec![
                    format!("QX{i:03}"),
                    format!("{}h{:02}", i % 24, i * 7 % 60),
                    format!("{}", i % 9),
                ]
            })
            .collect(),
    );
    vec![
        ("s1.csv".into(), s1),
        ("s2.csv".into(), s2),
        ("s3.csv".into(), s3),
        ("birds.csv".into(), birds),
        ("trains.csv".into(), trains),
    ]
}

pub fn write_tables(dir: &Path, tables: &[(String, RawTable)]) {
    std::fs::create_dir_all(dir).unwrap();
    for (name, t) in tables {
        write_raw_table(&dir.join(name), t).unwrap();
    }
}
