use branchq::verify;

fn main() {
    let ids: Vec<u8> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let ids = if ids.is_empty() {
        verify::CRITERIA.iter().map(|c| c.0).collect()
    } else {
        ids
    };
    let mut failed = 0;
    for id in ids {
        let report = verify::run(id);
        println!("{}", report.summary());
        failed += usize::from(!report.passed());
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
