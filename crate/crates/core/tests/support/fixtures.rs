#![allow(dead_code)]

use std::path::PathBuf;

use cvrptw_core::instance::{Customer, Depot};
use cvrptw_core::{parse_solomon, Instance};

/// `(x, y, demand, open, close, service)` per customer; depot at the origin.
pub fn instance(rows: &[(f64, f64, f64, f64, f64, f64)], capacity: f64) -> Instance {
    Instance {
        name: "fixture".into(),
        depot: Depot {
            x: 0.0,
            y: 0.0,
            ready: 0.0,
            due: 1e6,
        },
        customers: rows
            .iter()
            .enumerate()
            .map(
                |(k, &(x, y, demand, tw_open, tw_close, service_time))| Customer {
                    id: k + 1,
                    x,
                    y,
                    demand,
                    tw_open,
                    tw_close,
                    service_time,
                },
            )
            .collect(),
        vehicle_capacity: capacity,
        vehicle_count: 25,
        speed: 1.0,
    }
}

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/solomon")
}

pub fn solomon(size: usize, name: &str) -> Instance {
    let path = data_dir()
        .join(size.to_string())
        .join(format!("{name}.txt"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    parse_solomon(&text).expect("bundled instance parses")
}

pub fn all_solomon(size: usize) -> Vec<Instance> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(data_dir().join(size.to_string()))
        .expect("data directory")
        .map(|e| e.unwrap().path())
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            parse_solomon(&std::fs::read_to_string(p).unwrap()).expect("bundled instance parses")
        })
        .collect()
}
