import { App } from "./app";
import { AuditApi } from "./api";
import "./styles.css";

const root = document.getElementById("app");
if (!root) throw new Error("missing #app mount point");
new App(root, new AuditApi("")).start();
