export type Locale = "de" | "en";

const de = {
  appName: "DigiOnTrack",
  login_title: "Anmeldung",
  login_username: "Benutzername",
  login_password: "Passwort",
  login_submit: "Anmelden",
  logout: "Abmelden",
  events: "Ereignisse",
  no_events: "Keine offenen Ereignisse.",
  no_event_selected: "Kein Ereignis ausgewählt.",
  train_car: "Fahrzeug",
  train: "Zug",
  entered: "Einfahrt",
  exited: "Ausfahrt",
  date: "Datum",
  time: "Uhrzeit",
  location: "Ort",
  faults_found: "Gefundene Fehler",
  repairs_done: "Durchgeführte Reparaturen",
  rail_labels: "Ereignis-Labels",
  create_label: "Neues Label anlegen",
  create_label_title: "Label anlegen",
  existing_labels: "Vorhandene Labels",
  no_labels_yet: "Noch keine Labels vorhanden.",
  label_name: "Bezeichnung",
  confirm: "Bestätigen",
  back: "Zurück",
  close: "Schließen",
  send: "Senden",
  verify_title: "Daten überprüfen",
  verify_hint: "Bitte prüfen Sie die Angaben vor dem Absenden.",
  selected_labels: "Ausgewählte Labels",
  submitted_ok: "Labels wurden gespeichert.",
  submit_failed: "Speichern fehlgeschlagen",
  nothing_selected: "Bitte wählen Sie mindestens ein Label aus.",
  session_expired: "Sitzung abgelaufen, bitte erneut anmelden.",
  offline_queued: "Keine Verbindung, Aktionen werden zwischengespeichert.",
  map_fallback: "Karte nicht verfügbar. Position:",
  study_title: "Studiendurchlauf",
  participant_id: "Teilnehmerkennung",
  age: "Alter",
  gender: "Geschlecht",
  occupation: "Beruf",
  notes: "Notizen",
  scenario_file: "Szenario-Datei",
  start_session: "Sitzung starten",
  session_running: "Sitzung",
  group: "Gruppe",
  round: "Runde",
  round_workshop: "Werkstatt",
  round_rails: "Strecke",
  hand_over: "Gerät an den Teilnehmer übergeben und Runde starten.",
  start_round: "Runde starten",
  task: "Aufgabe",
  all_tasks_done: "Alle Aufgaben abgeschlossen.",
  round_closed: "Runde beendet",
  reason_completed: "abgeschlossen",
  reason_timeout: "Zeit abgelaufen",
  remaining: "Verbleibend",
  next_round: "Weiter zur nächsten Runde",
  study_done: "Studie abgeschlossen. Kennzahlen der Sitzung:",
  scenario_invalid: "Szenario-Datei konnte nicht gelesen werden",
  login_failed: "Anmeldung fehlgeschlagen",
};

const en: Record<StringKey, string> = {
  appName: "DigiOnTrack",
  login_title: "Sign in",
  login_username: "Username",
  login_password: "Password",
  login_submit: "Sign in",
  logout: "Log out",
  events: "Events",
  no_events: "No open events.",
  no_event_selected: "No event selected.",
  train_car: "Train car",
  train: "Train",
  entered: "Entered",
  exited: "Exited",
  date: "Date",
  time: "Time",
  location: "Location",
  faults_found: "Faults found",
  repairs_done: "Repairs done",
  rail_labels: "Event labels",
  create_label: "Create new label",
  create_label_title: "Create label",
  existing_labels: "Existing labels",
  no_labels_yet: "No labels yet.",
  label_name: "Name",
  confirm: "Confirm",
  back: "Back",
  close: "Close",
  send: "Send",
  verify_title: "Verify data",
  verify_hint: "Please check the details before submitting.",
  selected_labels: "Selected labels",
  submitted_ok: "Labels saved.",
  submit_failed: "Submit failed",
  nothing_selected: "Please select at least one label.",
  session_expired: "Session expired, please sign in again.",
  offline_queued: "No connection, actions are buffered locally.",
  map_fallback: "Map unavailable. Position:",
  study_title: "Study run",
  participant_id: "Participant id",
  age: "Age",
  gender: "Gender",
  occupation: "Occupation",
  notes: "Notes",
  scenario_file: "Scenario file",
  start_session: "Start session",
  session_running: "Session",
  group: "Group",
  round: "Round",
  round_workshop: "Workshop",
  round_rails: "Rails",
  hand_over: "Hand the device to the participant and start the round.",
  start_round: "Start round",
  task: "Task",
  all_tasks_done: "All tasks completed.",
  round_closed: "Round closed",
  reason_completed: "completed",
  reason_timeout: "time expired",
  remaining: "Remaining",
  next_round: "Continue to next round",
  study_done: "Study finished. Session metrics:",
  scenario_invalid: "Could not read the scenario file",
  login_failed: "Sign-in failed",
};

export type StringKey = keyof typeof de;

const TABLES: Record<Locale, Record<StringKey, string>> = { de, en };

export class Strings {
  constructor(public locale: Locale = "de") {}

  t(key: StringKey): string {
    return TABLES[this.locale][key];
  }
}

export function asLocale(value: string | undefined): Locale {
  return value === "en" ? "en" : "de";
}

export function stringKeys(): StringKey[] {
  return Object.keys(de) as StringKey[];
}

export function table(locale: Locale): Record<StringKey, string> {
  return TABLES[locale];
}
