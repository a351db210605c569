import { readFileSync } from "fs";
import Papa from "papaparse";

/** Column-oriented view of a parsed CSV: every cell coerced to number. */
export type Columns = Record<string, number[]>;

/**
 * Read a CSV and return the required columns as numeric arrays.
 *
 * Throws with the full list of missing column names so a schema mismatch
 * is diagnosable from the message alone.
 */
export function loadColumns(path: string, required: readonly string[]): Columns {
  const text = readFileSync(path, "utf-8");
  const parsed = Papa.parse<Record<string, string>>(text, {
    header: true,
    delimiter: ",",
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    const first = parsed.errors[0];
    throw new Error(`${path}: malformed CSV (${first.message})`);
  }
  const fields = parsed.meta.fields ?? [];
  const missing = required.filter((name) => !fields.includes(name));
  if (missing.length > 0) {
    throw new Error(`${path}: missing required columns: ${missing.join(", ")}`);
  }
  if (parsed.data.length === 0) {
    throw new Error(`${path}: no data rows`);
  }
  const columns: Columns = {};
  for (const name of required) {
    columns[name] = parsed.data.map((row, i) => {
      const value = Number(row[name]);
      if (!Number.isFinite(value)) {
        throw new Error(`${path}: row ${i + 1}, column ${name}: not a finite number`);
      }
      return value;
    });
  }
  return columns;
}
