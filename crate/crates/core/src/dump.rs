//! Debug dumps of frames and cubes as CSV, one complex value per row.

use std::io::Write;

use crate::frame::SymbolFrame;
use crate::radar_sim::RadarCube;

/// Columns `n,i,mu,re,im` for every transmit antenna, zeros included.
pub fn write_frame_csv<W: Write>(frame: &SymbolFrame, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "i", "mu", "re", "im"])?;
    for mu in 0..frame.num_symbols() {
        for n in 0..frame.num_tx() {
            for i in 0..frame.num_subcarriers() {
                let v = frame.d_tx(n, i, mu);
                w.serialize((n, i, mu, v.re, v.im))?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Columns `m,i,mu,re,im`.
pub fn write_cube_csv<W: Write>(cube: &RadarCube, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["m", "i", "mu", "re", "im"])?;
    let (nr, ns, np) = cube.dims();
    for mu in 0..np {
        for i in 0..ns {
            for m in 0..nr {
                let v = cube.get(m, i, mu);
                w.serialize((m, i, mu, v.re, v.im))?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{SystemConfig, TargetSpec};
    use crate::frame::{random_frame, PrivatePeriod};
    use crate::radar_sim::simulate_rx;

    #[test]
    fn row_counts_and_values() {
        let cfg = SystemConfig { num_subcarriers: 8, num_symbols: 2, num_tx: 6, num_active: 3, num_radar_rx: 4, ..SystemConfig::desk() };
        let frame = random_frame(&cfg, PrivatePeriod::EverySymbol, 1).unwrap();
        let mut buf = Vec::new();
        write_frame_csv(&frame, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 6 * 8 * 2);
        assert!(text.starts_with("n,i,mu,re,im\n"));

        let cube = simulate_rx(&frame, &[TargetSpec::new(10.0, 20.0, 1.0)], &cfg).unwrap();
        let mut buf = Vec::new();
        write_cube_csv(&cube, &mut buf).unwrap();
        let mut rdr = csv::Reader::from_reader(buf.as_slice());
        let rows: Vec<(usize, usize, usize, f64, f64)> = rdr.deserialize().map(|r| r.unwrap()).collect();
        assert_eq!(rows.len(), 4 * 8 * 2);
        for (m, i, mu, re, im) in rows {
            let v = cube.get(m, i, mu);
            assert_eq!((re, im), (v.re, v.im));
        }
    }
}
