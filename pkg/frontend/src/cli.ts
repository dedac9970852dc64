#!/usr/bin/env node
import { render } from "./render.js";

function main(argv: string[]): number {
  const args = argv.slice(2);
  if (args.length === 0 || args[0] === "--help") {
    console.log("usage: ffcool-plots <bundle-dir> [--out FILE] [--format svg|png]");
    return args.length === 0 ? 2 : 0;
  }
  const dir = args[0];
  let out: string | undefined;
  let format: "svg" | "png" = "svg";
  for (let i = 1; i < args.length; i++) {
    if (args[i] === "--out") out = args[++i];
    else if (args[i] === "--format") format = args[++i] as "svg" | "png";
    else {
      console.error(`unknown argument ${args[i]}`);
      return 2;
    }
  }
  try {
    const path = render(dir, { out, format });
    console.log(`wrote ${path}`);
    return 0;
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 1;
  }
}

process.exit(main(process.argv));
