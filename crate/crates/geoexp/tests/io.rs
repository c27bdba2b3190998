use geoexp::io;
use geoexp::study::{self, Record};
use geoexp_core::bayes::{self, BayesConfig};
use geoexp_core::design::{self, DesignMatrix};
use geoexp_core::estimation;
use geoexp_core::seed::{stream_rng, Stream};
use geoexp_core::sim::{self, SimConfig};

fn dataset() -> sim::Dataset {
    let config = SimConfig {
        g_count: 12,
        b_count: 4,
        delta: 0.02,
        ..SimConfig::default()
    };
    let inputs = sim::replicate_inputs(&config, 3, 0, false).unwrap();
    sim::replicate_dataset(&inputs, &config, 3, 0).unwrap()
}

#[test]
fn design_csv_round_trip() {
    let d = design::scrambled_checkerboard(20, 30, &mut stream_rng(1, 0, Stream::Design)).unwrap();
    let mut buf = Vec::new();
    io::write_design_csv(&mut buf, &d).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    let header = text.lines().next().unwrap();
    assert!(header.starts_with("brand_1,brand_2,") && header.ends_with(",brand_30"));
    assert!(text.lines().skip(1).all(|l| l.split(',').all(|c| c == "+1" || c == "-1")));
    assert_eq!(io::read_design_csv(&buf[..]).unwrap(), d);
}

#[test]
fn design_files_by_extension() {
    let dir = tempfile::tempdir().unwrap();
    let d = design::collision_free_6x6();
    for name in ["d.csv", "d.json"] {
        let path = dir.path().join(name);
        io::write_design(&path, &d).unwrap();
        assert_eq!(io::read_design(&path).unwrap(), d);
    }
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("d.json")).unwrap()).unwrap();
    assert_eq!(json["g_count"], 6);
    assert_eq!(json["b_count"], 6);
    assert_eq!(json["entries"].as_array().unwrap().len(), 36);
}

#[test]
fn bad_designs_are_rejected() {
    assert!(io::read_design_csv("brand_1,brand_3\n+1,-1\n".as_bytes()).is_err());
    assert!(io::read_design_csv("brand_1,brand_2\n+1,0\n".as_bytes()).is_err());
    assert!(io::read_design_csv("brand_1,brand_2\n+1,-1,+1\n".as_bytes()).is_err());
}

#[test]
fn dataset_round_trip_is_exact() {
    let data = dataset();
    let mut buf = Vec::new();
    io::write_dataset(&mut buf, &data).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert_eq!(text.lines().next().unwrap(), "geo,brand,y_pre,x_post,y_post,true_beta");
    assert_eq!(io::read_dataset(&buf[..]).unwrap(), data);

    // Row order does not matter and truth may be absent.
    let mut lines: Vec<&str> = text.lines().collect();
    let header = lines.remove(0);
    lines.reverse();
    let stripped: Vec<String> = lines
        .iter()
        .map(|l| {
            let mut cells: Vec<&str> = l.split(',').collect();
            cells[5] = "";
            cells.join(",")
        })
        .collect();
    let shuffled = format!("{header}\n{}\n", stripped.join("\n"));
    let back = io::read_dataset(shuffled.as_bytes()).unwrap();
    assert_eq!(back.y_post, data.y_post);
    assert_eq!(back.true_beta, None);
}

#[test]
fn incomplete_datasets_are_rejected() {
    let data = dataset();
    let mut buf = Vec::new();
    io::write_dataset(&mut buf, &data).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let short: Vec<&str> = text.lines().take(text.lines().count() - 1).collect();
    assert!(io::read_dataset(short.join("\n").as_bytes()).is_err());
    let dup = format!("{text}{}\n", text.lines().nth(1).unwrap());
    assert!(io::read_dataset(dup.as_bytes()).is_err());
}

#[test]
fn fits_round_trip() {
    let fits = estimation::fit_all_brands(&dataset()).unwrap();
    let mut buf = Vec::new();
    io::write_fits(&mut buf, &fits).unwrap();
    assert!(String::from_utf8(buf.clone())
        .unwrap()
        .starts_with("brand,alpha0,alpha1,beta_hat,var_beta,p_value\n"));
    let rows = io::read_fits(&buf[..]).unwrap();
    assert_eq!(rows.len(), 4);
    for (b, (r, f)) in rows.iter().zip(&fits).enumerate() {
        assert_eq!(*r, io::FitRow::from_fit(b, f));
    }
}

#[test]
fn chains_round_trip() {
    let data = dataset();
    let config = BayesConfig {
        iterations: 400,
        burn_in: 100,
        chains: 2,
        thin: 3,
        ..BayesConfig::default()
    };
    let chains = bayes::gibbs_run(&data, &config, &mut stream_rng(1, 0, Stream::Sampler)).unwrap();
    let mut buf = Vec::new();
    io::write_chains(&mut buf, &chains, config.burn_in, config.thin).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "chain,iter,param,value");
    assert!(lines.next().unwrap().starts_with("1,100,alpha0[1],"));
    assert!(text.contains(",397,sigma2_beta,") && !text.contains(",400,"));
    assert_eq!(io::read_chains(&buf[..]).unwrap(), chains);
}

#[test]
fn parameter_labels_are_one_based() {
    use geoexp_core::bayes::Param;
    for p in Param::all(3) {
        assert_eq!(io::parse_param_label(&io::param_label(p)), Some(p));
    }
    assert_eq!(io::param_label(Param::Beta(0)), "beta[1]");
    assert_eq!(io::parse_param_label("beta[0]"), None);
}

#[test]
fn records_round_trip_with_empty_cells() {
    let records = vec![
        Record {
            replicate: 0,
            delta: 0.01,
            brand: 1,
            beta_true: 5.0,
            beta_hat: 4.2,
            var_hat: 0.8,
            p_value: 0.01,
            beta_tilde: None,
            bayes_mean: Some(4.5),
            ci_lo: Some(3.0),
            ci_hi: Some(6.0),
        },
        Record {
            replicate: 1,
            delta: 0.005,
            brand: 2,
            beta_true: 1.0 / 3.0,
            beta_hat: -0.1,
            var_hat: 2.0,
            p_value: 0.9,
            beta_tilde: Some(0.2),
            bayes_mean: None,
            ci_lo: None,
            ci_hi: None,
        },
    ];
    let mut buf = Vec::new();
    study::write_records(&mut buf, &records).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "replicate,delta,brand,beta_true,beta_hat,var_hat,p_value,beta_tilde,bayes_mean,ci_lo,ci_hi"
    );
    assert!(text.lines().nth(1).unwrap().contains(",0.01,,4.5,"));
    assert_eq!(study::read_records(&buf[..]).unwrap(), records);
}

#[test]
fn trace_has_one_row_per_point() {
    let out = design::scramble(
        DesignMatrix::checkerboard(8, 6).unwrap(),
        &design::ScrambleOptions::for_dims(8, 6),
        &mut stream_rng(2, 0, Stream::Design),
    )
    .unwrap();
    let mut buf = Vec::new();
    io::write_trace(&mut buf, &out.trace).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), out.trace.len() + 1);
    assert!(text.starts_with("accepted_flips,attempts,brand_min,"));
}
