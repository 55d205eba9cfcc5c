// Spoken hints via the platform speech facility. The bridge sends text
// only; uttering it is the client's job.

export function speak(text: string, locale = 'it-IT'): void {
  const synth = window.speechSynthesis
  if (!synth) return
  synth.cancel() // hints should be immediate, not queued behind old ones
  const utterance = new SpeechSynthesisUtterance(text)
  utterance.lang = locale
  utterance.rate = 1.1
  synth.speak(utterance)
}

export function localeTag(serverLocale: string): string {
  return serverLocale === 'en' ? 'en-US' : 'it-IT'
}
