#!/usr/bin/env node
/**
 * render_figures <kind> <in.csv> <out.svg>
 *
 * Renders one figure from a plot-data CSV produced by the simulation CLI.
 * Kinds: scaling, qq, asclt-decay.
 */

import { writeFileSync } from "fs";
import { KINDS, renderFigure } from "./charts.js";

export function run(argv: string[]): number {
  if (argv.length !== 3) {
    console.error(`usage: render_figures <${KINDS.join("|")}> <in.csv> <out.svg>`);
    return 2;
  }
  const [kind, input, output] = argv;
  try {
    const svg = renderFigure(kind, input);
    writeFileSync(output, svg, "utf-8");
    console.log(`${output} (${Buffer.byteLength(svg)} bytes)`);
    return 0;
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : err}`);
    return 2;
  }
}

const entry = process.argv[1] ?? "";
if (entry.endsWith("cli.js") || entry.endsWith("render_figures")) {
  process.exit(run(process.argv.slice(2)));
}
