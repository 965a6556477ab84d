//! Published score charts written out as plain comparisons, in the charts'
//! own wording ("<= 8", "9-11", ...). Used as an independent oracle for
//! the band tables shipped with the library.

/// `None` means the chart does not score this variable.
pub fn chart_points(score: &str, variable: &str, v: f64) -> Option<u32> {
    let p = match (score, variable) {
        ("NEWS" | "NEWS2", "resprate") => {
            if v <= 8.0 {
                3
            } else if v <= 11.0 {
                1
            } else if v <= 20.0 {
                0
            } else if v <= 24.0 {
                2
            } else {
                3
            }
        }
        ("NEWS", "o2sat") => {
            if v <= 91.0 {
                3
            } else if v <= 93.0 {
                2
            } else if v <= 95.0 {
                1
            } else {
                0
            }
        }
        // Scale 2, room air.
        ("NEWS2", "o2sat") => {
            if v <= 83.0 {
                3
            } else if v <= 85.0 {
                2
            } else if v <= 87.0 {
                1
            } else {
                0
            }
        }
        ("NEWS" | "NEWS2", "temperature") => {
            if v <= 35.0 {
                3
            } else if v <= 36.0 {
                1
            } else if v <= 38.0 {
                0
            } else if v <= 39.0 {
                1
            } else {
                2
            }
        }
        ("NEWS" | "NEWS2", "sbp") => {
            if v <= 90.0 {
                3
            } else if v <= 100.0 {
                2
            } else if v <= 110.0 {
                1
            } else if v <= 219.0 {
                0
            } else {
                3
            }
        }
        ("NEWS" | "NEWS2", "heartrate") => {
            if v <= 40.0 {
                3
            } else if v <= 50.0 {
                1
            } else if v <= 90.0 {
                0
            } else if v <= 110.0 {
                1
            } else if v <= 130.0 {
                2
            } else {
                3
            }
        }
        ("MEWS", "sbp") => {
            if v <= 70.0 {
                3
            } else if v <= 80.0 {
                2
            } else if v <= 100.0 {
                1
            } else if v <= 199.0 {
                0
            } else {
                2
            }
        }
        ("MEWS", "heartrate") => {
            if v <= 40.0 {
                2
            } else if v <= 50.0 {
                1
            } else if v <= 100.0 {
                0
            } else if v <= 110.0 {
                1
            } else if v <= 129.0 {
                2
            } else {
                3
            }
        }
        ("MEWS", "resprate") => {
            if v < 9.0 {
                2
            } else if v <= 14.0 {
                0
            } else if v <= 20.0 {
                1
            } else if v <= 29.0 {
                2
            } else {
                3
            }
        }
        ("MEWS", "temperature") => {
            if v < 35.0 {
                2
            } else if v <= 38.4 {
                0
            } else {
                2
            }
        }
        ("REMS", "age") => {
            if v < 45.0 {
                0
            } else if v <= 54.0 {
                2
            } else if v <= 64.0 {
                3
            } else if v <= 74.0 {
                5
            } else {
                6
            }
        }
        ("REMS", "map") => {
            if v <= 49.0 {
                4
            } else if v <= 69.0 {
                2
            } else if v <= 109.0 {
                0
            } else if v <= 129.0 {
                2
            } else if v <= 159.0 {
                3
            } else {
                4
            }
        }
        ("REMS", "heartrate") => {
            if v <= 39.0 {
                4
            } else if v <= 54.0 {
                3
            } else if v <= 69.0 {
                2
            } else if v <= 109.0 {
                0
            } else if v <= 139.0 {
                2
            } else if v <= 179.0 {
                3
            } else {
                4
            }
        }
        ("REMS", "resprate") => {
            if v <= 5.0 {
                4
            } else if v <= 9.0 {
                2
            } else if v <= 11.0 {
                1
            } else if v <= 24.0 {
                0
            } else if v <= 34.0 {
                1
            } else if v <= 49.0 {
                3
            } else {
                4
            }
        }
        ("REMS", "o2sat") => {
            if v < 75.0 {
                4
            } else if v <= 85.0 {
                3
            } else if v <= 89.0 {
                1
            } else {
                0
            }
        }
        ("CART", "resprate") => {
            if v < 21.0 {
                0
            } else if v <= 23.0 {
                8
            } else if v <= 25.0 {
                12
            } else if v <= 29.0 {
                15
            } else {
                22
            }
        }
        ("CART", "heartrate") => {
            if v < 110.0 {
                0
            } else if v <= 139.0 {
                4
            } else {
                13
            }
        }
        ("CART", "dbp") => {
            if v <= 34.0 {
                13
            } else if v <= 39.0 {
                6
            } else if v <= 49.0 {
                4
            } else {
                0
            }
        }
        ("CART", "age") => {
            if v < 55.0 {
                0
            } else if v <= 69.0 {
                4
            } else {
                9
            }
        }
        _ => return None,
    };
    Some(p)
}

/// Grid of chart-resolution values for a variable: 0.1 degC steps for
/// temperature, whole units otherwise.
pub fn grid(variable: &str) -> Vec<f64> {
    match variable {
        "temperature" => (250..=450).map(|k| k as f64 / 10.0).collect(),
        "o2sat" => (0..=100).map(f64::from).collect(),
        "age" => (18..=120).map(f64::from).collect(),
        "resprate" => (0..=300).map(f64::from).collect(),
        "heartrate" => (0..=350).map(f64::from).collect(),
        _ => (0..=375).map(f64::from).collect(),
    }
}

/// Every (score, variable, value) where the library's band table and the
/// chart disagree, plus the number of grid points checked.
pub fn score_mismatches() -> (Vec<String>, usize) {
    let mut out = Vec::new();
    let mut checked = 0;
    for def in edbench::scores::ScoreDefinition::defaults() {
        for c in &def.components {
            for v in grid(&c.variable) {
                checked += 1;
                let want = chart_points(&def.name, &c.variable, v);
                let got = c.points(v);
                if want != got {
                    out.push(format!("{} {} at {v}: chart {want:?}, table {got:?}", def.name, c.variable));
                }
            }
        }
    }
    (out, checked)
}
