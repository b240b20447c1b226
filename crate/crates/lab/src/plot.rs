//! Gnuplot scripts for log-log decay plots with predicted-slope guides.

use std::fmt::Write;

/// One curve read from a CSV column (1-based, as gnuplot counts).
pub struct Curve {
    pub column: usize,
    pub title: String,
    /// Predicted exponent in `1+t`, anchored at `anchor = (t, value)`.
    pub guide: Option<(f64, (f64, f64))>,
}

pub struct Panel {
    pub csv: String,
    pub title: String,
    pub ylabel: String,
    pub curves: Vec<Curve>,
    /// `true`: log-log in `1+t`; `false`: semi-log in `t`.
    pub loglog: bool,
}

pub fn script(output_png: &str, panels: &[Panel]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "# gnuplot script; run `gnuplot plot.gp` in this directory"
    );
    let _ = writeln!(
        s,
        "set terminal pngcairo size 900,{} enhanced",
        420 * panels.len().max(1)
    );
    let _ = writeln!(s, "set output '{output_png}'");
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set key outside right");
    let _ = writeln!(s, "set grid");
    let _ = writeln!(s, "set multiplot layout {},1", panels.len().max(1));
    for p in panels {
        let _ = writeln!(s, "set title '{}' noenhanced", p.title);
        let _ = writeln!(s, "set ylabel '{}' noenhanced", p.ylabel);
        if p.loglog {
            let _ = writeln!(s, "set logscale xy");
            let _ = writeln!(s, "set xlabel '1+t'");
        } else {
            let _ = writeln!(s, "unset logscale x");
            let _ = writeln!(s, "set logscale y");
            let _ = writeln!(s, "set xlabel 't'");
        }
        let mut parts = Vec::new();
        for c in &p.curves {
            let x = if p.loglog { "(1+$1)" } else { "1" };
            parts.push(format!(
                "'{}' using {x}:(${} > 0 ? ${} : NaN) skip 1 with linespoints title '{}' noenhanced",
                p.csv, c.column, c.column, c.title
            ));
            if let Some((slope, (t0, v0))) = c.guide {
                parts.push(format!(
                    "{v0:e}*(x/{:e})**({slope}) with lines dashtype 2 title 'slope {slope:.3}'",
                    1.0 + t0
                ));
            }
        }
        let _ = writeln!(s, "plot {}", parts.join(", \\\n     "));
    }
    let _ = writeln!(s, "unset multiplot");
    s
}
